/* Links against liborbicell_ffi.a; exit status 0 on success. */
#include <stdio.h>
#include <string.h>
#include "orbicell.h"

#define CHECK(cond)                                           \
    do {                                                      \
        if (!(cond)) {                                        \
            fprintf(stderr, "failed: %s (line %d)\n", #cond, __LINE__); \
            return 1;                                         \
        }                                                     \
    } while (0)

int main(void) {
    const uint32_t edge[2] = {1, 2};
    OcPresentation *p = NULL;
    CHECK(oc_presentation_new(2, edge, 1, 2, 2, OC_MODE_COMPLEX, true, &p) == OC_STATUS_OK);
    CHECK(p != NULL);

    size_t len = 0;
    CHECK(oc_presentation_poincare(p, NULL, 0, &len) == OC_STATUS_OK);
    CHECK(len == 6);
    size_t betti[6];
    CHECK(oc_presentation_poincare(p, betti, 6, &len) == OC_STATUS_OK);
    const size_t want[6] = {1, 0, 0, 4, 4, 1};
    CHECK(memcmp(betti, want, sizeof want) == 0);

    size_t n = 0;
    CHECK(oc_presentation_len(p, &n) == OC_STATUS_OK);
    CHECK(n == 10);

    /* the degree-0 element is the unit */
    int64_t c[4];
    size_t idx[4];
    size_t terms = 0;
    CHECK(oc_presentation_product(p, 0, 3, c, idx, 4, &terms) == OC_STATUS_OK);
    CHECK(terms == 1 && c[0] == 1 && idx[0] == 3);

    char *json = NULL;
    CHECK(oc_presentation_to_json(p, &json) == OC_STATUS_OK);
    CHECK(strstr(json, "\"poincare\":[1,0,0,4,4,1]") != NULL);
    oc_string_free(json);
    oc_presentation_free(p);

    CHECK(oc_presentation_new(2, edge, 1, 2, 1, OC_MODE_COMPLEX, true, &p) == OC_STATUS_UNSUPPORTED);
    CHECK(p == NULL);
    CHECK(oc_last_error() != NULL);
    CHECK(oc_presentation_len(NULL, &n) == OC_STATUS_NULL_POINTER);
    puts("ok");
    return 0;
}
