//! Minimal NIfTI-1 single-file reader.
//!
//! Only what the segmentation pipeline needs is parsed: dimensions, the
//! voxel datatype, `vox_offset` and the `scl_slope`/`scl_inter` rescale
//! pair. Orientation fields are ignored and voxels stay in file order
//! (x fastest).

use std::fs;
use std::io::Read;
use std::path::Path;

use flate2::read::GzDecoder;

use crate::{Error, GrayImage, Result};

pub const HEADER_SIZE: usize = 348;
const MAGIC_OFFSET: usize = 344;
const GZIP_MAGIC: [u8; 2] = [0x1f, 0x8b];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Endian {
    Little,
    Big,
}

/// Voxel encodings the reader understands, keyed by the NIfTI `datatype` code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Datatype {
    U8,
    I16,
    I32,
    F32,
    F64,
    I8,
    U16,
}

impl Datatype {
    pub fn from_code(code: i16) -> Result<Self> {
        Ok(match code {
            2 => Datatype::U8,
            4 => Datatype::I16,
            8 => Datatype::I32,
            16 => Datatype::F32,
            64 => Datatype::F64,
            256 => Datatype::I8,
            512 => Datatype::U16,
            other => return Err(Error::UnsupportedDatatype(other)),
        })
    }

    pub fn code(self) -> i16 {
        match self {
            Datatype::U8 => 2,
            Datatype::I16 => 4,
            Datatype::I32 => 8,
            Datatype::F32 => 16,
            Datatype::F64 => 64,
            Datatype::I8 => 256,
            Datatype::U16 => 512,
        }
    }

    pub fn size(self) -> usize {
        match self {
            Datatype::U8 | Datatype::I8 => 1,
            Datatype::I16 | Datatype::U16 => 2,
            Datatype::I32 | Datatype::F32 => 4,
            Datatype::F64 => 8,
        }
    }
}

/// The header fields the reader consumes.
#[derive(Debug, Clone, PartialEq)]
pub struct Header {
    pub dim: [i16; 8],
    pub datatype: Datatype,
    pub bitpix: i16,
    pub vox_offset: f32,
    pub scl_slope: f32,
    pub scl_inter: f32,
    pub little_endian: bool,
}

impl Header {
    /// Parses the 348-byte header. Byte order is detected from `sizeof_hdr`.
    pub fn parse(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_SIZE {
            return Err(Error::MalformedHeader(format!(
                "{} bytes, need {HEADER_SIZE}",
                bytes.len()
            )));
        }
        let raw: [u8; 4] = bytes[0..4].try_into().unwrap();
        let endian = if i32::from_le_bytes(raw) == HEADER_SIZE as i32 {
            Endian::Little
        } else if i32::from_be_bytes(raw) == HEADER_SIZE as i32 {
            Endian::Big
        } else {
            return Err(Error::MalformedHeader(format!(
                "sizeof_hdr is {}, expected 348",
                i32::from_le_bytes(raw)
            )));
        };
        match &bytes[MAGIC_OFFSET..MAGIC_OFFSET + 4] {
            b"n+1\0" => {}
            b"ni1\0" => {
                return Err(Error::MalformedHeader(
                    "split .hdr/.img pairs are not supported".into(),
                ))
            }
            other => {
                return Err(Error::MalformedHeader(format!(
                    "bad magic {:?}",
                    String::from_utf8_lossy(other)
                )))
            }
        }
        let rd = Reader { bytes, endian };
        let mut dim = [0i16; 8];
        for (i, d) in dim.iter_mut().enumerate() {
            *d = rd.i16(40 + 2 * i);
        }
        if !(1..=7).contains(&dim[0]) {
            return Err(Error::MalformedHeader(format!("dim[0] = {}", dim[0])));
        }
        if dim[1..=dim[0] as usize].iter().any(|&d| d < 1) {
            return Err(Error::MalformedHeader(format!(
                "non-positive extent in {dim:?}"
            )));
        }
        let datatype = Datatype::from_code(rd.i16(70))?;
        Ok(Header {
            dim,
            datatype,
            bitpix: rd.i16(72),
            vox_offset: rd.f32(108),
            scl_slope: rd.f32(112),
            scl_inter: rd.f32(116),
            little_endian: endian == Endian::Little,
        })
    }

    /// Spatial extents; missing trailing dimensions count as 1.
    pub fn spatial_dims(&self) -> [usize; 3] {
        let n = self.dim[0] as usize;
        let ext = |i: usize| if i <= n { self.dim[i] as usize } else { 1 };
        [ext(1), ext(2), ext(3)]
    }

    /// Voxel count over every declared dimension.
    pub fn total_voxels(&self) -> usize {
        (1..=self.dim[0] as usize)
            .map(|i| self.dim[i] as usize)
            .product()
    }

    /// Offset of the first voxel. NIfTI-1 requires at least 352 for single files.
    pub fn data_offset(&self) -> usize {
        (self.vox_offset.max(352.0)) as usize
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    endian: Endian,
}

impl Reader<'_> {
    fn array<const N: usize>(&self, at: usize) -> [u8; N] {
        self.bytes[at..at + N].try_into().unwrap()
    }

    fn i16(&self, at: usize) -> i16 {
        match self.endian {
            Endian::Little => i16::from_le_bytes(self.array(at)),
            Endian::Big => i16::from_be_bytes(self.array(at)),
        }
    }

    fn f32(&self, at: usize) -> f32 {
        match self.endian {
            Endian::Little => f32::from_le_bytes(self.array(at)),
            Endian::Big => f32::from_be_bytes(self.array(at)),
        }
    }

    fn voxel(&self, at: usize, dt: Datatype) -> f64 {
        macro_rules! read {
            ($t:ty) => {
                match self.endian {
                    Endian::Little => <$t>::from_le_bytes(self.array(at)) as f64,
                    Endian::Big => <$t>::from_be_bytes(self.array(at)) as f64,
                }
            };
        }
        match dt {
            Datatype::U8 => self.bytes[at] as f64,
            Datatype::I8 => self.bytes[at] as i8 as f64,
            Datatype::I16 => read!(i16),
            Datatype::U16 => read!(u16),
            Datatype::I32 => read!(i32),
            Datatype::F32 => read!(f32),
            Datatype::F64 => read!(f64),
        }
    }
}

/// A 3D scalar volume with rescaled voxel values.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume {
    dims: [usize; 3],
    data: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    /// File axis feeding each volume axis. Always the identity: the reader
    /// does not reorient.
    pub axis_order: [usize; 3],
}

impl Volume {
    pub fn new(dims: [usize; 3], data: Vec<f64>) -> Result<Self> {
        let expected = dims.iter().product::<usize>();
        if data.len() != expected {
            return Err(Error::dims(
                format!("{expected} voxels ({dims:?})"),
                format!("{} voxels", data.len()),
            ));
        }
        Ok(Volume {
            dims,
            data,
            slope: 1.0,
            intercept: 0.0,
            axis_order: [0, 1, 2],
        })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> f64 {
        let [nx, ny, _] = self.dims;
        self.data[x + nx * (y + ny * z)]
    }

    /// Raw 2D plane perpendicular to `axis`, without normalization.
    ///
    /// Plane coordinates: axis 2 gives (x, y), axis 1 gives (x, z) and
    /// axis 0 gives (y, z).
    pub fn plane(&self, axis: usize, index: usize) -> Result<(usize, usize, Vec<f64>)> {
        if axis > 2 {
            return Err(Error::InvalidParameter(format!("axis {axis} not in 0..=2")));
        }
        let len = self.dims[axis];
        if index >= len {
            return Err(Error::IndexOutOfRange { axis, index, len });
        }
        let [nx, ny, nz] = self.dims;
        let (w, h) = match axis {
            0 => (ny, nz),
            1 => (nx, nz),
            _ => (nx, ny),
        };
        let mut out = Vec::with_capacity(w * h);
        for v in 0..h {
            for u in 0..w {
                out.push(match axis {
                    0 => self.get(index, u, v),
                    1 => self.get(u, index, v),
                    _ => self.get(u, v, index),
                });
            }
        }
        Ok((w, h, out))
    }
}

/// Reads a `.nii` or `.nii.gz` file. Gzip is detected from the content.
pub fn load_volume(path: impl AsRef<Path>) -> Result<Volume> {
    let path = path.as_ref();
    let raw = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_volume(&raw)
}

/// Parses an in-memory NIfTI-1 file, optionally gzip-compressed.
pub fn parse_volume(raw: &[u8]) -> Result<Volume> {
    let bytes = if raw.starts_with(&GZIP_MAGIC) {
        let mut out = Vec::new();
        GzDecoder::new(raw)
            .read_to_end(&mut out)
            .map_err(|e| Error::Decode(format!("gzip: {e}")))?;
        out
    } else {
        raw.to_vec()
    };
    let header = Header::parse(&bytes)?;
    let endian = if header.little_endian {
        Endian::Little
    } else {
        Endian::Big
    };
    let offset = header.data_offset();
    let item = header.datatype.size();
    let declared = header.total_voxels() * item;
    let available = bytes.len().saturating_sub(offset);
    if available < declared {
        return Err(Error::dims(
            format!("{declared} payload bytes"),
            format!("{available} bytes"),
        ));
    }

    let (slope, intercept) = if header.scl_slope == 0.0 || !header.scl_slope.is_finite() {
        (1.0, 0.0)
    } else {
        (header.scl_slope as f64, header.scl_inter as f64)
    };
    // Only the first 3D volume of a 4D+ series is kept.
    let dims = header.spatial_dims();
    let n = dims.iter().product::<usize>();
    let rd = Reader {
        bytes: &bytes,
        endian,
    };
    let data = (0..n)
        .map(|i| rd.voxel(offset + i * item, header.datatype) * slope + intercept)
        .collect();
    let mut vol = Volume::new(dims, data)?;
    vol.slope = slope;
    vol.intercept = intercept;
    Ok(vol)
}

/// Extracts one plane and min-max normalizes it to `[0, 1]`.
/// A constant plane becomes all zeros.
pub fn extract_slice(vol: &Volume, axis: usize, index: usize) -> Result<GrayImage> {
    let (w, h, plane) = vol.plane(axis, index)?;
    Ok(normalize_min_max(w, h, plane))
}

pub(crate) fn normalize_min_max(w: usize, h: usize, mut plane: Vec<f64>) -> GrayImage {
    let (lo, hi) = plane
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let span = hi - lo;
    if span > 0.0 && span.is_finite() {
        for v in &mut plane {
            *v = ((*v - lo) / span).clamp(0.0, 1.0);
        }
    } else {
        plane.iter_mut().for_each(|v| *v = 0.0);
    }
    GrayImage::from_raw(w, h, plane)
}

/// Serializes a minimal NIfTI-1 single file. Test fixture support only.
#[doc(hidden)]
pub fn encode_fixture(
    dims: [usize; 3],
    datatype: Datatype,
    slope: f32,
    inter: f32,
    payload: &[u8],
    big_endian: bool,
) -> Vec<u8> {
    let mut h = vec![0u8; 352];
    let put16 = |h: &mut Vec<u8>, at: usize, v: i16| {
        let b = if big_endian {
            v.to_be_bytes()
        } else {
            v.to_le_bytes()
        };
        h[at..at + 2].copy_from_slice(&b);
    };
    let put32 = |h: &mut Vec<u8>, at: usize, b: [u8; 4]| h[at..at + 4].copy_from_slice(&b);
    let i32b = |v: i32| {
        if big_endian {
            v.to_be_bytes()
        } else {
            v.to_le_bytes()
        }
    };
    let f32b = |v: f32| {
        if big_endian {
            v.to_be_bytes()
        } else {
            v.to_le_bytes()
        }
    };
    put32(&mut h, 0, i32b(348));
    put16(&mut h, 40, 3);
    for (i, &d) in dims.iter().enumerate() {
        put16(&mut h, 42 + 2 * i, d as i16);
    }
    for i in 4..8 {
        put16(&mut h, 40 + 2 * i, 1);
    }
    put16(&mut h, 70, datatype.code());
    put16(&mut h, 72, (datatype.size() * 8) as i16);
    put32(&mut h, 108, f32b(352.0));
    put32(&mut h, 112, f32b(slope));
    put32(&mut h, 116, f32b(inter));
    h[344..348].copy_from_slice(b"n+1\0");
    h.extend_from_slice(payload);
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f32_payload(values: &[f32]) -> Vec<u8> {
        values.iter().flat_map(|v| v.to_le_bytes()).collect()
    }

    #[test]
    fn accepts_standard_magic_and_size() {
        let bytes = encode_fixture([2, 2, 1], Datatype::U8, 1.0, 0.0, &[0, 1, 2, 3], false);
        let header = Header::parse(&bytes).unwrap();
        assert_eq!(header.spatial_dims(), [2, 2, 1]);
        assert_eq!(header.datatype, Datatype::U8);
        assert!(header.little_endian);
    }

    #[test]
    fn rejects_bad_magic_and_size() {
        let mut bytes = encode_fixture([1, 1, 1], Datatype::U8, 1.0, 0.0, &[0], false);
        bytes[344..348].copy_from_slice(b"ni1\0");
        assert!(matches!(
            parse_volume(&bytes),
            Err(Error::MalformedHeader(_))
        ));
        bytes[344..348].copy_from_slice(b"xyz\0");
        assert!(matches!(
            parse_volume(&bytes),
            Err(Error::MalformedHeader(_))
        ));

        let mut bytes = encode_fixture([1, 1, 1], Datatype::U8, 1.0, 0.0, &[0], false);
        bytes[0..4].copy_from_slice(&540i32.to_le_bytes());
        assert!(matches!(
            parse_volume(&bytes),
            Err(Error::MalformedHeader(_))
        ));
    }

    #[test]
    fn rescales_float32() {
        let payload = f32_payload(&[0.5; 32]);
        let bytes = encode_fixture([4, 4, 2], Datatype::F32, 2.0, 1.0, &payload, false);
        let vol = parse_volume(&bytes).unwrap();
        assert_eq!(vol.dims(), [4, 4, 2]);
        assert!(vol.data().iter().all(|&v| v == 2.0));
    }

    #[test]
    fn zero_slope_means_unscaled() {
        let bytes = encode_fixture([1, 1, 1], Datatype::U8, 0.0, 5.0, &[7], false);
        assert_eq!(parse_volume(&bytes).unwrap().data(), &[7.0]);
    }

    #[test]
    fn truncated_payload_is_dimension_mismatch() {
        let payload = f32_payload(&[1.0; 32]);
        let mut bytes = encode_fixture([4, 4, 2], Datatype::F32, 1.0, 0.0, &payload, false);
        bytes.truncate(352 + payload.len() / 2);
        assert!(matches!(
            parse_volume(&bytes),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn unsupported_datatype() {
        let mut bytes = encode_fixture([1, 1, 1], Datatype::U8, 1.0, 0.0, &[0], false);
        bytes[70..72].copy_from_slice(&128i16.to_le_bytes()); // RGB24
        assert!(matches!(
            parse_volume(&bytes),
            Err(Error::UnsupportedDatatype(128))
        ));
    }

    #[test]
    fn big_endian_matches_little_endian() {
        let values: Vec<i16> = vec![-3, 0, 100, 2000, 7, 8];
        let le: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
        let be: Vec<u8> = values.iter().flat_map(|v| v.to_be_bytes()).collect();
        let a = encode_fixture([3, 2, 1], Datatype::I16, 1.5, -2.0, &le, false);
        let b = encode_fixture([3, 2, 1], Datatype::I16, 1.5, -2.0, &be, true);
        let (ha, hb) = (Header::parse(&a).unwrap(), Header::parse(&b).unwrap());
        assert_eq!(ha.dim, hb.dim);
        assert_eq!(ha.scl_slope, hb.scl_slope);
        assert!(!hb.little_endian);
        assert_eq!(
            parse_volume(&a).unwrap().data(),
            parse_volume(&b).unwrap().data()
        );
    }

    #[test]
    fn gzip_is_detected_from_content() {
        use flate2::{write::GzEncoder, Compression};
        use std::io::Write;
        let bytes = encode_fixture([2, 1, 1], Datatype::U16, 1.0, 0.0, &[1, 0, 2, 0], false);
        let mut enc = GzEncoder::new(Vec::new(), Compression::default());
        enc.write_all(&bytes).unwrap();
        let gz = enc.finish().unwrap();
        assert_eq!(parse_volume(&gz).unwrap().data(), &[1.0, 2.0]);
    }

    #[test]
    fn constant_volume_slices_to_zeros() {
        let vol = Volume::new([2, 2, 2], vec![7.0; 8]).unwrap();
        for axis in 0..3 {
            for index in 0..2 {
                let img = extract_slice(&vol, axis, index).unwrap();
                assert_eq!(img.data(), &[0.0; 4]);
            }
        }
    }

    #[test]
    fn slice_min_max() {
        let vol = Volume::new([3, 1, 1], vec![0.0, 50.0, 100.0]).unwrap();
        let img = extract_slice(&vol, 2, 0).unwrap();
        assert_eq!(img.data(), &[0.0, 0.5, 1.0]);
    }

    #[test]
    fn slice_index_out_of_range() {
        let vol = Volume::new([2, 2, 2], vec![0.0; 8]).unwrap();
        assert!(matches!(
            extract_slice(&vol, 2, 2),
            Err(Error::IndexOutOfRange {
                axis: 2,
                index: 2,
                len: 2
            })
        ));
    }

    #[test]
    fn plane_orientation() {
        // value = x + 10y + 100z
        let dims = [2, 3, 4];
        let data = (0..24)
            .map(|i| {
                let (x, y, z) = (i % 2, (i / 2) % 3, i / 6);
                (x + 10 * y + 100 * z) as f64
            })
            .collect();
        let vol = Volume::new(dims, data).unwrap();
        let (w, h, p) = vol.plane(0, 1).unwrap();
        assert_eq!((w, h), (3, 4));
        assert_eq!(p[w + 2], 1.0 + 20.0 + 100.0);
        let (w, h, p) = vol.plane(1, 2).unwrap();
        assert_eq!((w, h), (2, 4));
        assert_eq!(p[3 * w + 1], 1.0 + 20.0 + 300.0);
    }
}
