use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::{Error, Result};

/// Dense symmetric matrix of squared dissimilarities with a zero diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct DissimilarityMatrix {
    n: usize,
    data: Vec<f64>,
}

const SYMMETRY_TOL: f64 = 1e-12;

impl DissimilarityMatrix {
    /// Build from a function evaluated on the upper triangle.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let v = f(i, j);
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        DissimilarityMatrix { n, data }
    }

    /// Validate and take ownership of a row-major `n x n` buffer.
    pub fn from_row_major(n: usize, mut data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::invalid(format!("expected {} entries for n = {n}, got {}", n * n, data.len())));
        }
        for i in 0..n {
            for j in i..n {
                let (a, b) = (data[i * n + j], data[j * n + i]);
                for v in [a, b] {
                    if !v.is_finite() || v < 0.0 {
                        return Err(Error::invalid(format!(
                            "entry ({i}, {j}) = {v} is not a finite nonnegative number"
                        )));
                    }
                }
                if i == j {
                    if a.abs() > SYMMETRY_TOL {
                        return Err(Error::invalid(format!("diagonal entry ({i}, {i}) = {a} is not zero")));
                    }
                    data[i * n + i] = 0.0;
                } else if (a - b).abs() > SYMMETRY_TOL * a.abs().max(b.abs()).max(1.0) {
                    return Err(Error::AsymmetricMatrix { i, j, a, b });
                } else {
                    let m = 0.5 * (a + b);
                    data[i * n + j] = m;
                    data[j * n + i] = m;
                }
            }
        }
        Ok(DissimilarityMatrix { n, data })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(Error::invalid(format!("row {i} has {} entries, expected {n}", r.len())));
        }
        Self::from_row_major(n, rows.into_iter().flatten().collect())
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// `D(X, X)`: sum over all ordered pairs.
    pub fn total(&self) -> f64 {
        self.data.iter().sum()
    }

    /// Matrix for the dissimilarity `lambda * d`, i.e. entries times `lambda^2`.
    pub fn scaled(&self, lambda: f64) -> Self {
        let f = lambda * lambda;
        DissimilarityMatrix { n: self.n, data: self.data.iter().map(|v| v * f).collect() }
    }

    /// Restriction to the given indices, in order.
    pub fn submatrix(&self, idx: &[usize]) -> Self {
        let n = idx.len();
        let data = idx.iter().flat_map(|&i| idx.iter().map(move |&j| (i, j))).map(|(i, j)| self.get(i, j)).collect();
        DissimilarityMatrix { n, data }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        for i in 0..self.n {
            let line: Vec<String> = self.row(i).iter().map(|v| format!("{v:?}")).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rows = Vec::new();
        for (lineno, line) in BufReader::new(r).lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let row = line
                .split(',')
                .map(|tok| {
                    tok.trim().parse::<f64>().map_err(|_| {
                        Error::Parse(format!("line {}: cannot parse {:?} as a number", lineno + 1, tok.trim()))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Self::from_rows(rows)
    }

    /// `u64` little-endian `n`, then `n^2` little-endian `f64`, row-major.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&(self.n as u64).to_le_bytes())?;
        for v in &self.data {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut word = [0u8; 8];
        r.read_exact(&mut word)?;
        let n = usize::try_from(u64::from_le_bytes(word)).map_err(|_| Error::Parse("matrix size overflows".into()))?;
        let count = n.checked_mul(n).ok_or_else(|| Error::Parse("matrix size overflows".into()))?;
        let mut data = Vec::with_capacity(count);
        for _ in 0..count {
            r.read_exact(&mut word).map_err(|e| Error::Parse(format!("truncated matrix file: {e}")))?;
            data.push(f64::from_le_bytes(word));
        }
        let mut rest = Vec::new();
        r.read_to_end(&mut rest)?;
        if !rest.is_empty() {
            return Err(Error::Parse(format!("{} trailing bytes after matrix data", rest.len())));
        }
        Self::from_row_major(n, data)
    }

    /// Files ending in `.bin` use the binary layout, anything else CSV.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path)?;
        if is_binary(path) {
            Self::read_binary(BufReader::new(file))
        } else {
            Self::read_csv(file)
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        if is_binary(path) {
            self.write_binary(&mut w)?;
        } else {
            self.write_csv(&mut w)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn is_binary(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("bin"))
}
