//! Matrix Market coordinate export of the assembled operators.

use std::io::Write;
use std::path::Path;

use nalgebra::DVector;
use nalgebra_sparse::CsrMatrix;

use super::model::FullOrderModel;
use crate::error::Result;

pub fn write_sparse<W: Write>(out: &mut W, m: &CsrMatrix<f64>) -> Result<()> {
    writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(out, "{} {} {}", m.nrows(), m.ncols(), m.nnz())?;
    for (i, j, v) in m.triplet_iter() {
        writeln!(out, "{} {} {:e}", i + 1, j + 1, v)?;
    }
    Ok(())
}

/// Writes the nonzeros of a column vector (as an n×1 coordinate matrix).
pub fn write_vector<W: Write>(out: &mut W, v: &DVector<f64>) -> Result<()> {
    let nz: Vec<(usize, f64)> = v.iter().copied().enumerate().filter(|(_, x)| *x != 0.0).collect();
    writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(out, "{} 1 {}", v.len(), nz.len())?;
    for (i, x) in nz {
        writeln!(out, "{} 1 {:e}", i + 1, x)?;
    }
    Ok(())
}

/// Exports `A.mtx`, `b_<i>.mtx`, `c_vol_<i>.mtx` and `c_peak.mtx` into `dir`.
pub fn export_model(model: &FullOrderModel, dir: &Path) -> Result<Vec<String>> {
    std::fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    let mut emit = |name: String, f: &dyn Fn(&mut std::io::BufWriter<std::fs::File>) -> Result<()>| -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(dir.join(&name))?);
        f(&mut w)?;
        w.flush()?;
        files.push(name);
        Ok(())
    };
    emit("A.mtx".into(), &|w| write_sparse(w, model.operator.matrix()))?;
    for (i, b) in model.b_taylor().iter().enumerate() {
        emit(format!("b_{i}.mtx"), &|w| write_vector(w, b))?;
    }
    for (i, c) in model.volume_taylor().iter().enumerate() {
        emit(format!("c_vol_{i}.mtx"), &|w| write_vector(w, c))?;
    }
    emit("c_peak.mtx".into(), &|w| write_vector(w, model.peak_row()))?;
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_one_based_indices() {
        let mut coo = nalgebra_sparse::CooMatrix::new(2, 2);
        coo.push(0, 0, -2.0);
        coo.push(1, 0, 1.5);
        let m = CsrMatrix::from(&coo);
        let mut buf = Vec::new();
        write_sparse(&mut buf, &m).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "%%MatrixMarket matrix coordinate real general");
        assert_eq!(lines[1], "2 2 2");
        assert_eq!(lines[2], "1 1 -2e0");
        assert_eq!(lines[3], "2 1 1.5e0");
    }
}
