use alloc::vec::Vec;

/// Magic number of an unsigned-byte, 3-D IDX file (images).
pub const IMAGES_MAGIC: u32 = 0x0000_0803;
/// Magic number of an unsigned-byte, 1-D IDX file (labels).
pub const LABELS_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IdxError {
    #[error("bad IDX magic {found:#010x} at byte offset {offset}")]
    BadMagic { found: u32, offset: usize },
    #[error("truncated IDX stream at byte offset {offset}: expected {expected} bytes, {available} available")]
    Truncated {
        offset: usize,
        expected: usize,
        available: usize,
    },
    #[error("IDX dimensions overflow at byte offset {offset}")]
    DimensionOverflow { offset: usize },
    #[error("{extra} trailing bytes after IDX payload at byte offset {offset}")]
    TrailingBytes { offset: usize, extra: usize },
}

/// Decoded images with pixels scaled to `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct IdxImages {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum IdxData {
    Images(IdxImages),
    Labels(Vec<u8>),
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], IdxError> {
        let available = self.bytes.len() - self.pos;
        if available < n {
            return Err(IdxError::Truncated {
                offset: self.pos,
                expected: n,
                available,
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32_be(&mut self) -> Result<u32, IdxError> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn finish(self) -> Result<(), IdxError> {
        let extra = self.bytes.len() - self.pos;
        if extra > 0 {
            return Err(IdxError::TrailingBytes { offset: self.pos, extra });
        }
        Ok(())
    }
}

/// Parse an IDX byte stream holding either images (magic 2051) or labels
/// (magic 2049). All header integers are big-endian.
pub fn parse_idx(bytes: &[u8]) -> Result<IdxData, IdxError> {
    let mut r = Reader { bytes, pos: 0 };
    let magic = r.u32_be()?;
    match magic {
        IMAGES_MAGIC => {
            let count = r.u32_be()? as usize;
            let rows = r.u32_be()? as usize;
            let cols = r.u32_be()? as usize;
            let len = count
                .checked_mul(rows)
                .and_then(|v| v.checked_mul(cols))
                .ok_or(IdxError::DimensionOverflow { offset: 4 })?;
            let payload = r.take(len)?;
            r.finish()?;
            let pixels = payload.iter().map(|&b| b as f32 / 255.0).collect();
            Ok(IdxData::Images(IdxImages {
                count,
                rows,
                cols,
                pixels,
            }))
        }
        LABELS_MAGIC => {
            let count = r.u32_be()? as usize;
            let labels = r.take(count)?.to_vec();
            r.finish()?;
            Ok(IdxData::Labels(labels))
        }
        found => Err(IdxError::BadMagic { found, offset: 0 }),
    }
}

pub fn parse_idx_images(bytes: &[u8]) -> Result<IdxImages, IdxError> {
    match parse_idx(bytes)? {
        IdxData::Images(i) => Ok(i),
        IdxData::Labels(_) => Err(IdxError::BadMagic {
            found: LABELS_MAGIC,
            offset: 0,
        }),
    }
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>, IdxError> {
    match parse_idx(bytes)? {
        IdxData::Labels(l) => Ok(l),
        IdxData::Images(_) => Err(IdxError::BadMagic {
            found: IMAGES_MAGIC,
            offset: 0,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn header(magic: u32, dims: &[u32]) -> Vec<u8> {
        let mut v = magic.to_be_bytes().to_vec();
        for d in dims {
            v.extend_from_slice(&d.to_be_bytes());
        }
        v
    }

    #[test]
    fn parses_two_images() {
        let mut bytes = header(2051, &[2, 28, 28]);
        assert_eq!(&bytes[..4], &[0, 0, 8, 3]);
        bytes.extend((0..1568).map(|i| (i % 256) as u8));
        let imgs = parse_idx_images(&bytes).unwrap();
        assert_eq!((imgs.count, imgs.rows, imgs.cols), (2, 28, 28));
        assert_eq!(imgs.pixels.len(), 1568);
        assert_eq!(imgs.pixels[255], 1.0);
        assert_eq!(imgs.pixels[0], 0.0);
    }

    #[test]
    fn parses_labels() {
        let mut bytes = header(2049, &[3]);
        bytes.extend([7, 2, 1]);
        assert_eq!(parse_idx(&bytes).unwrap(), IdxData::Labels(vec![7, 2, 1]));
    }

    #[test]
    fn truncated_payload_reports_sizes() {
        let mut bytes = header(2051, &[2, 28, 28]);
        bytes.extend([0u8; 1000]);
        assert_eq!(
            parse_idx(&bytes),
            Err(IdxError::Truncated {
                offset: 16,
                expected: 1568,
                available: 1000
            })
        );
    }

    #[test]
    fn wrong_magic_and_short_header() {
        let bytes = header(2050, &[1]);
        assert_eq!(parse_idx(&bytes), Err(IdxError::BadMagic { found: 2050, offset: 0 }));
        assert!(matches!(parse_idx(&[0, 0, 8]), Err(IdxError::Truncated { offset: 0, .. })));
        let bytes = header(2051, &[1, 28]);
        assert!(matches!(parse_idx(&bytes), Err(IdxError::Truncated { offset: 12, .. })));
    }

    #[test]
    fn overflowing_dimensions() {
        let bytes = header(2051, &[u32::MAX, u32::MAX, u32::MAX]);
        let r = parse_idx(&bytes);
        // On 64-bit targets the product overflows usize.
        assert!(matches!(
            r,
            Err(IdxError::DimensionOverflow { .. }) | Err(IdxError::Truncated { .. })
        ));
    }

    #[test]
    fn trailing_garbage_is_rejected() {
        let mut bytes = header(2049, &[1]);
        bytes.extend([3, 9]);
        assert_eq!(parse_idx(&bytes), Err(IdxError::TrailingBytes { offset: 9, extra: 1 }));
    }
}
