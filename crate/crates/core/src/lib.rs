pub mod asm;
pub mod channels;
pub mod cpu;
pub mod executive;
pub mod manifest;
pub mod memory;
pub mod rope;
pub mod word;
