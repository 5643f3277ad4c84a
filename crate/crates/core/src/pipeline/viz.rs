use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use super::pca::pca_project;
use crate::dataio::Dataset;
use crate::netcore::EncoderParams;
use crate::{Error, Matrix, Result};

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VizOutput {
    /// File names written, relative to the output directory.
    pub files: Vec<String>,
    pub rows: usize,
}

/// Writes `original_pca.csv`/`.svg` for the input features and, given an
/// encoder, `embedding_pca.csv`/`.svg` for its embeddings.
pub fn export_visualization(dataset: &Dataset, encoder: Option<&EncoderParams>, out_dir: &Path) -> Result<VizOutput> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut views = vec![("original_pca", dataset.features().clone())];
    if let Some(net) = encoder {
        views.push(("embedding_pca", net.forward(dataset.features())?));
    }
    let mut files = Vec::new();
    for (stem, x) in views {
        let coords = pca_project(&x)?;
        let csv_name = format!("{stem}.csv");
        write_coordinates_csv(&out_dir.join(&csv_name), &coords, dataset)?;
        let svg_name = format!("{stem}.svg");
        let svg_path = out_dir.join(&svg_name);
        std::fs::write(&svg_path, scatter_svg(&coords, dataset)).map_err(|e| Error::io(&svg_path, e))?;
        files.push(csv_name);
        files.push(svg_name);
    }
    Ok(VizOutput {
        files,
        rows: dataset.n_rows(),
    })
}

fn write_coordinates_csv(path: &Path, coords: &Matrix, dataset: &Dataset) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["pc1", "pc2", "class_name"])?;
    for (i, &y) in dataset.labels().iter().enumerate() {
        w.write_record([
            crate::dataio::format_real(coords[[i, 0]]),
            crate::dataio::format_real(coords[[i, 1]]),
            dataset.class_name(y).to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads back a coordinate CSV as (coordinates, class names).
pub fn read_coordinates_csv(path: &Path) -> Result<(Matrix, Vec<String>)> {
    let mut r = csv::Reader::from_path(path)?;
    let mut values = Vec::new();
    let mut names = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        for j in 0..2 {
            let v: f64 = rec[j].parse().map_err(|_| Error::MalformedRow {
                row,
                message: format!("bad coordinate {:?}", &rec[j]),
            })?;
            values.push(v);
        }
        names.push(rec[2].to_string());
    }
    let m = Matrix::from_shape_vec((names.len(), 2), values).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok((m, names))
}

fn scatter_svg(coords: &Matrix, dataset: &Dataset) -> String {
    const SIZE: f64 = 480.0;
    const PAD: f64 = 24.0;
    let range = |col: usize| {
        let c = coords.column(col);
        let lo = c.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo, if hi > lo { hi - lo } else { 1.0 })
    };
    let ((x0, xs), (y0, ys)) = (range(0), range(1));
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let span = SIZE - 2.0 * PAD;
    for (i, &y) in dataset.labels().iter().enumerate() {
        let px = PAD + (coords[[i, 0]] - x0) / xs * span;
        let py = SIZE - PAD - (coords[[i, 1]] - y0) / ys * span;
        let _ = writeln!(
            s,
            r#"<circle cx="{px:.2}" cy="{py:.2}" r="3" fill="{}" fill-opacity="0.7"><title>{}</title></circle>"#,
            PALETTE[y % PALETTE.len()],
            xml_escape(dataset.class_name(y))
        );
    }
    for (c, name) in dataset.class_names().iter().enumerate() {
        let ly = PAD + 14.0 * c as f64;
        let _ = writeln!(
            s,
            r#"<circle cx="{}" cy="{ly}" r="4" fill="{}"/><text x="{}" y="{}" font-size="11" font-family="sans-serif">{}</text>"#,
            SIZE - 90.0,
            PALETTE[c % PALETTE.len()],
            SIZE - 82.0,
            ly + 4.0,
            xml_escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}
