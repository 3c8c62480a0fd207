//! Raw planar array files.
//!
//! Layout, all integers little-endian:
//!
//! | bytes | content |
//! |---|---|
//! | 4 | magic `MBAR` |
//! | 1 | format version (1) |
//! | 1 | dtype code: 0 = u8, 1 = u16, 2 = f32, 3 = f64 |
//! | 2 | zero |
//! | 12 | height, width, channels as u32 |
//! | rest | samples channel by channel, each channel row-major |

use std::fs;
use std::path::Path;

use ndarray::{Array3, Axis};

use crate::error::StoreError;
use crate::store::{io_err, write_atomic};

pub const ARRAY_MAGIC: &[u8; 4] = b"MBAR";
const VERSION: u8 = 1;
const HEADER_LEN: usize = 20;

/// Sample types the array format can hold.
pub trait Element: Copy + Default {
    const CODE: u8;
    const SIZE: usize;
    fn put(self, out: &mut Vec<u8>);
    fn take(bytes: &[u8]) -> Self;
}

macro_rules! element {
    ($t:ty, $code:expr) => {
        impl Element for $t {
            const CODE: u8 = $code;
            const SIZE: usize = std::mem::size_of::<$t>();
            fn put(self, out: &mut Vec<u8>) {
                out.extend_from_slice(&self.to_le_bytes());
            }
            fn take(bytes: &[u8]) -> Self {
                <$t>::from_le_bytes(bytes.try_into().expect("exact sample width"))
            }
        }
    };
}

element!(u8, 0);
element!(u16, 1);
element!(f32, 2);
element!(f64, 3);

pub fn encode_array<T: Element>(array: &Array3<T>) -> Vec<u8> {
    let (h, w, c) = array.dim();
    let mut out = Vec::with_capacity(HEADER_LEN + array.len() * T::SIZE);
    out.extend_from_slice(ARRAY_MAGIC);
    out.extend_from_slice(&[VERSION, T::CODE, 0, 0]);
    for d in [h, w, c] {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for plane in array.axis_iter(Axis(2)) {
        for &v in plane.iter() {
            v.put(&mut out);
        }
    }
    out
}

pub fn decode_array<T: Element>(bytes: &[u8], path: &Path) -> Result<Array3<T>, StoreError> {
    let bad = |message: String| StoreError::Format {
        path: path.to_path_buf(),
        message,
    };
    if bytes.len() < HEADER_LEN || &bytes[..4] != ARRAY_MAGIC {
        return Err(bad("not an array file".into()));
    }
    if bytes[4] != VERSION {
        return Err(bad(format!("unsupported version {}", bytes[4])));
    }
    if bytes[5] != T::CODE {
        return Err(bad(format!("dtype code {} where {} was expected", bytes[5], T::CODE)));
    }
    let dim = |i: usize| u32::from_le_bytes(bytes[8 + 4 * i..12 + 4 * i].try_into().expect("4 bytes")) as usize;
    let (h, w, c) = (dim(0), dim(1), dim(2));
    let body = &bytes[HEADER_LEN..];
    let expected = h * w * c * T::SIZE;
    if body.len() != expected {
        return Err(bad(format!("{} data bytes for shape {h}x{w}x{c}, expected {expected}", body.len())));
    }
    let plane = h * w;
    Ok(Array3::from_shape_fn((h, w, c), |(y, x, k)| {
        let at = (k * plane + y * w + x) * T::SIZE;
        T::take(&body[at..at + T::SIZE])
    }))
}

pub fn write_array<T: Element>(path: &Path, array: &Array3<T>) -> Result<(), StoreError> {
    write_atomic(path, &encode_array(array))
}

pub fn read_array<T: Element>(path: &Path) -> Result<Array3<T>, StoreError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    decode_array(&bytes, path)
}
