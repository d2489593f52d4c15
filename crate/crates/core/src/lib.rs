pub mod diophantine;
pub mod geom;
pub mod linlattice;
pub mod spiral;
pub mod tessellation;
pub mod verify;
