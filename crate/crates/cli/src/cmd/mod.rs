pub mod adapt;
pub mod calibrate;
pub mod defaults;
pub mod evaluate;
pub mod fuse;
pub mod simulate;
