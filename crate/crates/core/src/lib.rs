pub mod geomap;
pub mod media;
pub mod shellnorm;
pub mod solver;
pub mod specfun;
