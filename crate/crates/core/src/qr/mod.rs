//! QR version 1, error-correction level H, with raw 72-bit payloads.

pub mod cells;
pub mod gf256;
pub mod matrix;
pub mod rs;

pub use cells::{cell_downsample, cell_upsample, CellGrid};
pub use matrix::{
    data_module_positions, mask_bit, qr_build, qr_read, raw_data_octets, Payload72, QrMatrix, PAYLOAD_BITS, SIZE,
};
pub use rs::{rs_decode, rs_encode, CODEWORD_LEN, DATA_LEN, ECC_LEN};
