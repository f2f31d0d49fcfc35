pub mod cellular;
pub mod cli;
pub mod linalg;
pub mod orbit;
pub mod os_algebra;
pub mod poset;
pub mod ring;
pub mod sheaf;
pub mod tor;
