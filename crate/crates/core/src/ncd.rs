//! Normalized Compression Distance, the symmetric `K_NCD` kernel and Gram
//! matrices built from it.
//!
//! `NCD(x, y) = (C(xy) - min(C(x), C(y))) / max(C(x), C(y))` and
//! `K_NCD(x, y) = 1 - (NCD(x, y) + NCD(y, x)) / 2`. Values are returned as
//! computed, never clamped to `[0, 1]`.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;

use crate::compressor::{compressed_length, concat_length, CompressorSpec};
use crate::error::{Error, Result};
use crate::matrix::KernelMatrix;

const MAGIC: &[u8; 8] = b"NCDGRAM\0";
pub const FORMAT_VERSION: u32 = 1;

fn ncd_from_bits(cxy: u64, cx: u64, cy: u64) -> f64 {
    let (lo, hi) = if cx <= cy { (cx, cy) } else { (cy, cx) };
    (cxy as f64 - lo as f64) / hi as f64
}

/// `K_NCD` from the four compressed lengths. Swapping `(x, y)` swaps the
/// two addends, so the result is exactly symmetric.
pub fn k_ncd_from_bits(cx: u64, cy: u64, cxy: u64, cyx: u64) -> f64 {
    1.0 - (ncd_from_bits(cxy, cx, cy) + ncd_from_bits(cyx, cy, cx)) / 2.0
}

fn check_not_both_empty(x: &[u8], y: &[u8]) -> Result<()> {
    if x.is_empty() && y.is_empty() {
        return Err(Error::DegenerateInput(
            "NCD of two empty sequences is undefined".into(),
        ));
    }
    Ok(())
}

pub fn ncd(x: &[u8], y: &[u8], spec: &CompressorSpec) -> Result<f64> {
    check_not_both_empty(x, y)?;
    let cx = compressed_length(x, spec)?.bits;
    let cy = compressed_length(y, spec)?.bits;
    let cxy = concat_length(x, y, spec)?.bits;
    Ok(ncd_from_bits(cxy, cx, cy))
}

pub fn k_ncd(x: &[u8], y: &[u8], spec: &CompressorSpec) -> Result<f64> {
    check_not_both_empty(x, y)?;
    let cx = compressed_length(x, spec)?.bits;
    let cy = compressed_length(y, spec)?.bits;
    let cxy = concat_length(x, y, spec)?.bits;
    let cyx = concat_length(y, x, spec)?.bits;
    Ok(k_ncd_from_bits(cx, cy, cxy, cyx))
}

/// Kernel values together with the ids of the items along each axis and a
/// canonical description of how they were computed.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    pub values: KernelMatrix,
    pub row_ids: Vec<String>,
    pub col_ids: Vec<String>,
    pub kernel_spec: String,
}

/// Work counters of one build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct GramStats {
    pub single_compressions: u64,
    pub concat_compressions: u64,
    /// Number of `(i, j)` entries evaluated before mirroring.
    pub pair_evaluations: u64,
}

#[derive(Default)]
struct Counters {
    single: AtomicU64,
    concat: AtomicU64,
    pairs: AtomicU64,
}

impl Counters {
    fn snapshot(&self) -> GramStats {
        GramStats {
            single_compressions: self.single.load(Ordering::Relaxed),
            concat_compressions: self.concat.load(Ordering::Relaxed),
            pair_evaluations: self.pairs.load(Ordering::Relaxed),
        }
    }
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    if workers == 0 {
        return Err(Error::Config("worker count must be positive".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))
}

fn check_documents(ids: &[String], docs: &[&[u8]], what: &str) -> Result<()> {
    if docs.is_empty() {
        return Err(Error::DegenerateInput(format!("{what} is empty")));
    }
    if ids.len() != docs.len() {
        return Err(Error::Config(format!(
            "{} ids for {} documents",
            ids.len(),
            docs.len()
        )));
    }
    if let Some(k) = docs.iter().position(|d| d.is_empty()) {
        return Err(Error::DegenerateInput(format!("document {} is empty", ids[k])));
    }
    Ok(())
}

fn single_lengths(
    docs: &[&[u8]],
    spec: &CompressorSpec,
    counters: &Counters,
) -> Result<Vec<u64>> {
    docs.par_iter()
        .map(|d| {
            counters.single.fetch_add(1, Ordering::Relaxed);
            compressed_length(d, spec).map(|c| c.bits)
        })
        .collect()
}

/// Symmetric `K_NCD` Gram matrix of `docs`.
///
/// Each `C(doc)` is computed once. Entries `i <= j` are evaluated in
/// parallel on `workers` threads and mirrored; the result does not depend on
/// the worker count.
pub fn build_gram(
    ids: &[String],
    docs: &[&[u8]],
    spec: &CompressorSpec,
    workers: usize,
) -> Result<(GramMatrix, GramStats)> {
    spec.validate()?;
    check_documents(ids, docs, "corpus")?;
    let pool = pool(workers)?;
    let counters = Counters::default();
    let m = docs.len();

    let entries = pool.install(|| -> Result<Vec<f64>> {
        let single = single_lengths(docs, spec, &counters)?;
        let pairs: Vec<(usize, usize)> =
            (0..m).flat_map(|i| (i..m).map(move |j| (i, j))).collect();
        pairs
            .par_iter()
            .map(|&(i, j)| {
                counters.pairs.fetch_add(1, Ordering::Relaxed);
                let cij = concat_length(docs[i], docs[j], spec)?.bits;
                counters.concat.fetch_add(1, Ordering::Relaxed);
                let cji = if i == j {
                    cij
                } else {
                    counters.concat.fetch_add(1, Ordering::Relaxed);
                    concat_length(docs[j], docs[i], spec)?.bits
                };
                Ok(k_ncd_from_bits(single[i], single[j], cij, cji))
            })
            .collect()
    })?;

    let mut values = KernelMatrix::zeros(m, m);
    let mut k = 0;
    for i in 0..m {
        for j in i..m {
            values.set(i, j, entries[k]);
            values.set(j, i, entries[k]);
            k += 1;
        }
    }
    let gram = GramMatrix {
        values,
        row_ids: ids.to_vec(),
        col_ids: ids.to_vec(),
        kernel_spec: format!("k_ncd {spec}"),
    };
    Ok((gram, counters.snapshot()))
}

/// `|test| × |train|` matrix with `entry[t][i] = K_NCD(test_t, train_i)`.
pub fn build_cross_gram(
    test_ids: &[String],
    test_docs: &[&[u8]],
    train_ids: &[String],
    train_docs: &[&[u8]],
    spec: &CompressorSpec,
    workers: usize,
) -> Result<(GramMatrix, GramStats)> {
    spec.validate()?;
    check_documents(test_ids, test_docs, "test corpus")?;
    check_documents(train_ids, train_docs, "training corpus")?;
    let pool = pool(workers)?;
    let counters = Counters::default();
    let (rows, cols) = (test_docs.len(), train_docs.len());

    let entries = pool.install(|| -> Result<Vec<f64>> {
        let test_c = single_lengths(test_docs, spec, &counters)?;
        let train_c = single_lengths(train_docs, spec, &counters)?;
        (0..rows * cols)
            .into_par_iter()
            .map(|k| {
                let (t, i) = (k / cols, k % cols);
                counters.pairs.fetch_add(1, Ordering::Relaxed);
                counters.concat.fetch_add(2, Ordering::Relaxed);
                let cti = concat_length(test_docs[t], train_docs[i], spec)?.bits;
                let cit = concat_length(train_docs[i], test_docs[t], spec)?.bits;
                Ok(k_ncd_from_bits(test_c[t], train_c[i], cti, cit))
            })
            .collect()
    })?;

    let gram = GramMatrix {
        values: KernelMatrix::new(rows, cols, entries)?,
        row_ids: test_ids.to_vec(),
        col_ids: train_ids.to_vec(),
        kernel_spec: format!("k_ncd {spec}"),
    };
    Ok((gram, counters.snapshot()))
}

impl GramMatrix {
    pub fn is_square(&self) -> bool {
        self.values.is_square() && self.row_ids == self.col_ids
    }

    /// Binary layout, all integers little-endian:
    ///
    /// ```text
    /// magic "NCDGRAM\0" | version u32 | rows u64 | cols u64
    /// kernel_spec: u32 length + UTF-8
    /// rows × (u32 length + UTF-8 id) | cols × (u32 length + UTF-8 id)
    /// rows × cols f64, row-major
    /// ```
    pub fn to_bytes(&self) -> Vec<u8> {
        let (rows, cols) = (self.values.rows(), self.values.cols());
        let mut out = Vec::with_capacity(32 + 8 * rows * cols);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(rows as u64).to_le_bytes());
        out.extend_from_slice(&(cols as u64).to_le_bytes());
        put_str(&mut out, &self.kernel_spec);
        for id in self.row_ids.iter().chain(&self.col_ids) {
            put_str(&mut out, id);
        }
        for v in self.values.values() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = bytes;
        let mut magic = [0u8; 8];
        read_exact(&mut r, &mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("not a Gram matrix file".into()));
        }
        let version = u32::from_le_bytes(take(&mut r)?);
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported Gram format version {version}")));
        }
        let rows = u64::from_le_bytes(take(&mut r)?) as usize;
        let cols = u64::from_le_bytes(take(&mut r)?) as usize;
        let kernel_spec = get_str(&mut r)?;
        let row_ids = (0..rows).map(|_| get_str(&mut r)).collect::<Result<Vec<_>>>()?;
        let col_ids = (0..cols).map(|_| get_str(&mut r)).collect::<Result<Vec<_>>>()?;
        let expected = rows
            .checked_mul(cols)
            .and_then(|n| n.checked_mul(8))
            .ok_or_else(|| Error::Format("matrix dimensions overflow".into()))?;
        if r.len() != expected {
            return Err(Error::Format(format!(
                "expected {expected} bytes of matrix data, found {}",
                r.len()
            )));
        }
        let values = r
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        Ok(GramMatrix {
            values: KernelMatrix::new(rows, cols, values)?,
            row_ids,
            col_ids,
            kernel_spec,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes())
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes =
            fs::read(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        GramMatrix::from_bytes(&bytes)
    }

    /// Tab-separated text: a header row of column ids, then one row per
    /// item led by its id.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("id");
        for id in &self.col_ids {
            out.push('\t');
            out.push_str(id);
        }
        out.push('\n');
        for (i, id) in self.row_ids.iter().enumerate() {
            out.push_str(id);
            for v in self.values.row(i) {
                out.push('\t');
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        out
    }
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u32).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

fn read_exact(r: &mut &[u8], buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf)
        .map_err(|_| Error::Format("truncated Gram matrix file".into()))
}

fn take<const N: usize>(r: &mut &[u8]) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    read_exact(r, &mut buf)?;
    Ok(buf)
}

fn get_str(r: &mut &[u8]) -> Result<String> {
    let len = u32::from_le_bytes(take(r)?) as usize;
    if r.len() < len {
        return Err(Error::Format("truncated Gram matrix file".into()));
    }
    let (s, rest) = r.split_at(len);
    *r = rest;
    String::from_utf8(s.to_vec()).map_err(|_| Error::Format("id is not valid UTF-8".into()))
}

/// Writes the TSV export next to whatever else the caller produces.
pub fn write_tsv(gram: &GramMatrix, path: &Path) -> Result<()> {
    let mut file = fs::File::create(path)
        .map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
    file.write_all(gram.to_tsv().as_bytes())
        .map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("d{i}")).collect()
    }

    #[test]
    fn equal_lengths_give_zero() {
        assert_eq!(ncd_from_bits(40, 40, 40), 0.0);
    }

    #[test]
    fn kernel_arithmetic() {
        // NCD(x,y) = NCD(y,x) = 1 gives 0.
        assert_eq!(k_ncd_from_bits(10, 10, 20, 20), 0.0);
        // NCD(x,y) = 0.4, NCD(y,x) = 0.6 gives 0.5.
        assert!((k_ncd_from_bits(10, 10, 14, 16) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn both_empty_is_degenerate() {
        let spec = CompressorSpec::default();
        assert!(matches!(ncd(b"", b"", &spec), Err(Error::DegenerateInput(_))));
        assert!(matches!(k_ncd(b"", b"", &spec), Err(Error::DegenerateInput(_))));
        assert!(ncd(b"a", b"", &spec).is_ok());
    }

    #[test]
    fn empty_document_is_named() {
        let docs: Vec<&[u8]> = vec![b"abc", b""];
        match build_gram(&ids(2), &docs, &CompressorSpec::default(), 1) {
            Err(Error::DegenerateInput(msg)) => assert!(msg.contains("d1"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn counts_compressions() {
        let docs: Vec<&[u8]> = vec![b"alpha beta", b"gamma delta", b"alpha gamma"];
        let (_, stats) = build_gram(&ids(3), &docs, &CompressorSpec::ppm(2), 2).unwrap();
        assert_eq!(stats.single_compressions, 3);
        assert_eq!(stats.pair_evaluations, 6);
        assert_eq!(stats.concat_compressions, 9);
    }

    #[test]
    fn binary_round_trip_and_rejects_garbage() {
        let docs: Vec<&[u8]> = vec![b"one two three", b"four five six"];
        let (gram, _) = build_gram(&ids(2), &docs, &CompressorSpec::ppm(3), 1).unwrap();
        let back = GramMatrix::from_bytes(&gram.to_bytes()).unwrap();
        assert_eq!(back, gram);
        let mut bytes = gram.to_bytes();
        bytes.pop();
        assert!(GramMatrix::from_bytes(&bytes).is_err());
        assert!(GramMatrix::from_bytes(b"hello").is_err());
    }

    #[test]
    fn tsv_layout() {
        let gram = GramMatrix {
            values: KernelMatrix::new(1, 2, vec![0.5, 0.25]).unwrap(),
            row_ids: vec!["t".into()],
            col_ids: vec!["a".into(), "b".into()],
            kernel_spec: "k".into(),
        };
        assert_eq!(gram.to_tsv(), "id\ta\tb\nt\t0.5\t0.25\n");
    }
}
