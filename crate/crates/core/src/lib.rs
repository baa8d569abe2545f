pub mod aircraft;
pub mod emulator;
pub mod hlpn;
pub mod mapek;
pub mod ppn;
pub mod scenario;
