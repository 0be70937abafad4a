//! Locating street assets (stop signs, fire hydrants, ...) from 360°
//! drive-by photospheres: bearing rays from detections, pairwise
//! triangulation on a state-plane grid and density clustering.

pub mod cli;
pub mod cluster;
pub mod detector;
pub mod geodesy;
pub mod imaging;
pub mod pipeline;
pub mod synth;
pub mod triangulate;
