pub mod cli;
pub mod inconsistency;
pub mod io;
pub mod model;
pub mod sheaf;
pub mod topology;
