//! Oversampling baselines: Global-CS, Static-SMOTE and MDO.
//!
//! Every resampler returns the input rows unchanged and in their original
//! order, followed by the added rows.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng as _;
use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::dataio::Dataset;
use crate::{rng, Error, Matrix, Result};

/// Eigenvalues of a class covariance below this are raised to it.
pub const EIGEN_FLOOR: f64 = 1e-9;
/// Default neighbor count for SMOTE interpolation.
pub const SMOTE_NEIGHBORS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preprocessor {
    None,
    GlobalCs,
    StaticSmote,
    Mdo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Original,
    Duplicate,
    Synthetic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResampledDataset {
    pub dataset: Dataset,
    pub origin: Vec<Origin>,
    /// For added rows, the row they were copied or generated from.
    pub source: Vec<Option<usize>>,
}

/// Growable copy of a dataset that records where added rows come from.
struct Builder {
    rows: Vec<Vec<f64>>,
    labels: Vec<usize>,
    origin: Vec<Origin>,
    source: Vec<Option<usize>>,
}

impl Builder {
    fn new(ds: &Dataset) -> Self {
        let n = ds.n_rows();
        Self {
            rows: ds.features().rows().into_iter().map(|r| r.to_vec()).collect(),
            labels: ds.labels().to_vec(),
            origin: vec![Origin::Original; n],
            source: vec![None; n],
        }
    }

    fn push(&mut self, row: Vec<f64>, label: usize, origin: Origin, source: usize) {
        self.rows.push(row);
        self.labels.push(label);
        self.origin.push(origin);
        self.source.push(Some(source));
    }

    fn duplicate(&mut self, i: usize) {
        self.push(self.rows[i].clone(), self.labels[i], Origin::Duplicate, i);
    }

    fn finish(self, template: &Dataset) -> Result<ResampledDataset> {
        let d = template.n_features();
        let flat: Vec<f64> = self.rows.into_iter().flatten().collect();
        let features = Matrix::from_shape_vec((self.labels.len(), d), flat)
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        Ok(ResampledDataset {
            dataset: Dataset::new(features, self.labels, template.class_names().to_vec())?,
            origin: self.origin,
            source: self.source,
        })
    }
}

fn members_by_class(labels: &[usize], n_classes: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); n_classes];
    for (i, &y) in labels.iter().enumerate() {
        out[y].push(i);
    }
    out
}

fn require_two_classes(ds: &Dataset) -> Result<()> {
    if ds.n_present_classes() < 2 {
        return Err(Error::InvalidArgument("resampling needs at least two classes".into()));
    }
    Ok(())
}

fn unchanged(ds: &Dataset) -> ResampledDataset {
    ResampledDataset {
        dataset: ds.clone(),
        origin: vec![Origin::Original; ds.n_rows()],
        source: vec![None; ds.n_rows()],
    }
}

/// Dispatches on `pre`; [`Preprocessor::None`] returns the data unchanged.
pub fn apply(pre: Preprocessor, ds: &Dataset, rng: &mut rng::Rng) -> Result<ResampledDataset> {
    match pre {
        Preprocessor::None => Ok(unchanged(ds)),
        Preprocessor::GlobalCs => global_cs(ds, rng),
        Preprocessor::StaticSmote => static_smote(ds, rng, SMOTE_NEIGHBORS),
        Preprocessor::Mdo => mdo(ds, rng, None),
    }
}

/// Random oversampling of every present class to the majority count.
///
/// A class of size `n_c` has each member appear `floor(n_max / n_c)` times,
/// plus `n_max mod n_c` further copies of distinct members drawn uniformly.
pub fn global_cs(ds: &Dataset, rng: &mut rng::Rng) -> Result<ResampledDataset> {
    require_two_classes(ds)?;
    let n_max = ds.class_counts().iter().copied().max().unwrap_or(0);
    let mut b = Builder::new(ds);
    for members in members_by_class(ds.labels(), ds.n_classes()) {
        let nc = members.len();
        if nc == 0 || nc == n_max {
            continue;
        }
        for _ in 1..n_max / nc {
            for &i in &members {
                b.duplicate(i);
            }
        }
        for pick in index::sample(rng, nc, n_max % nc) {
            b.duplicate(members[pick]);
        }
    }
    b.finish(ds)
}

/// `x + u (neighbor - x)` with `u` uniform on [0, 1).
pub fn smote_interpolate(x: &[f64], neighbor: &[f64], rng: &mut rng::Rng) -> Vec<f64> {
    let u: f64 = rng.random();
    x.iter().zip(neighbor).map(|(a, b)| a + u * (b - a)).collect()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Iterated SMOTE. For as many rounds as there are present classes, the
/// currently smallest class (ties to the lower class id) receives as many
/// synthetic rows as it originally had. Each synthetic row interpolates a
/// random current member of the class towards one of its `k_smote` nearest
/// same-class rows. A single-member class is duplicated instead.
pub fn static_smote(ds: &Dataset, rng: &mut rng::Rng, k_smote: usize) -> Result<ResampledDataset> {
    require_two_classes(ds)?;
    if k_smote == 0 {
        return Err(Error::InvalidArgument("k_smote must be at least 1".into()));
    }
    let original = ds.class_counts().to_vec();
    let mut members = members_by_class(ds.labels(), ds.n_classes());
    let mut b = Builder::new(ds);
    for _ in 0..ds.n_present_classes() {
        let c = (0..members.len())
            .filter(|&c| original[c] > 0)
            .min_by_key(|&c| (members[c].len(), c))
            .expect("present class");
        for _ in 0..original[c] {
            let m = members[c].len();
            let base = members[c][rng.random_range(0..m)];
            let new_index = b.rows.len();
            if m < 2 {
                b.duplicate(base);
            } else {
                let mut others: Vec<(f64, usize)> = members[c]
                    .iter()
                    .filter(|&&j| j != base)
                    .map(|&j| (sq_dist(&b.rows[base], &b.rows[j]), j))
                    .collect();
                others.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
                let k = k_smote.min(others.len());
                let neighbor = others[rng.random_range(0..k)].1;
                let row = smote_interpolate(&b.rows[base], &b.rows[neighbor], rng);
                b.push(row, c, Origin::Synthetic, base);
            }
            members[c].push(new_index);
        }
    }
    b.finish(ds)
}

/// Mean and eigendecomposition of a class's sample covariance, with
/// eigenvalues clamped from below at [`EIGEN_FLOOR`].
pub struct ClassGeometry {
    pub mean: DVector<f64>,
    pub eigenvalues: DVector<f64>,
    /// Columns are eigenvectors.
    pub eigenvectors: DMatrix<f64>,
}

impl ClassGeometry {
    pub fn fit(rows: &[&[f64]]) -> Self {
        let m = rows.len();
        let d = rows[0].len();
        let x = DMatrix::from_fn(m, d, |i, j| rows[i][j]);
        let mean = x.row_mean().transpose();
        let centered = DMatrix::from_fn(m, d, |i, j| x[(i, j)] - mean[j]);
        let cov = centered.transpose() * &centered / (m.max(2) - 1) as f64;
        let eig = SymmetricEigen::new(cov);
        Self {
            mean,
            eigenvalues: eig.eigenvalues.map(|l| l.max(EIGEN_FLOOR)),
            eigenvectors: eig.eigenvectors,
        }
    }

    /// Coordinates of `x - mean` in the eigenbasis.
    pub fn to_eigen(&self, x: &[f64]) -> DVector<f64> {
        self.eigenvectors.transpose() * (DVector::from_column_slice(x) - &self.mean)
    }

    pub fn from_eigen(&self, z: &DVector<f64>) -> Vec<f64> {
        (&self.eigenvectors * z + &self.mean).iter().copied().collect()
    }

    pub fn sq_mahalanobis(&self, x: &[f64]) -> f64 {
        let z = self.to_eigen(x);
        z.iter().zip(self.eigenvalues.iter()).map(|(zi, l)| zi * zi / l).sum()
    }
}

/// Mahalanobis-distance oversampling. Each minority class is raised to its
/// target (default: the majority count) with synthetic rows at the same
/// squared Mahalanobis distance from the class mean as a randomly chosen
/// member: the distance budget is split over eigen-directions by a uniform
/// draw from the simplex and each coordinate gets a random sign. Classes
/// with fewer than 3 members are duplicated instead.
pub fn mdo(ds: &Dataset, rng: &mut rng::Rng, targets: Option<&[usize]>) -> Result<ResampledDataset> {
    require_two_classes(ds)?;
    let counts = ds.class_counts();
    let n_max = counts.iter().copied().max().unwrap_or(0);
    if let Some(t) = targets {
        if t.len() != counts.len() {
            return Err(Error::dim("mdo targets", counts.len(), t.len()));
        }
    }
    let mut b = Builder::new(ds);
    for (c, members) in members_by_class(ds.labels(), ds.n_classes()).into_iter().enumerate() {
        let target = targets.map_or(n_max, |t| t[c]);
        let m = members.len();
        if m == 0 || m >= target {
            continue;
        }
        let needed = target - m;
        if m < 3 {
            for _ in 0..needed {
                b.duplicate(members[rng.random_range(0..m)]);
            }
            continue;
        }
        let rows: Vec<&[f64]> = members
            .iter()
            .map(|&i| ds.features().row(i).to_slice().expect("standard layout"))
            .collect();
        let geo = ClassGeometry::fit(&rows);
        let d = geo.eigenvalues.len();
        for _ in 0..needed {
            let seed = members[rng.random_range(0..m)];
            let r2 = geo.sq_mahalanobis(&b.rows[seed]);
            // normalized unit exponentials are uniform on the simplex
            let e: Vec<f64> = (0..d).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
            let total: f64 = e.iter().sum();
            let z = DVector::from_fn(d, |i, _| {
                let share = if total > 0.0 { e[i] / total } else { 1.0 / d as f64 };
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                sign * (share * r2 * geo.eigenvalues[i]).sqrt()
            });
            b.push(geo.from_eigen(&z), c, Origin::Synthetic, seed);
        }
    }
    b.finish(ds)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_dataset(counts: &[usize]) -> Dataset {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (c, &n) in counts.iter().enumerate() {
            for i in 0..n {
                rows.push(vec![c as f64 * 10.0 + i as f64, (i * i) as f64 * 0.5 - c as f64]);
                labels.push(c);
            }
        }
        let flat: Vec<f64> = rows.into_iter().flatten().collect();
        Dataset::from_labels(Matrix::from_shape_vec((labels.len(), 2), flat).unwrap(), labels).unwrap()
    }

    fn appearances(r: &ResampledDataset, original: usize) -> usize {
        (0..r.dataset.n_rows())
            .filter(|&i| i == original || r.source[i] == Some(original))
            .count()
    }

    #[test]
    fn global_cs_exact_multiple() {
        let ds = line_dataset(&[4, 2]);
        let r = global_cs(&ds, &mut rng::seeded(0)).unwrap();
        assert_eq!(r.dataset.class_counts(), &[4, 4]);
        assert_eq!((appearances(&r, 4), appearances(&r, 5)), (2, 2));
    }

    #[test]
    fn global_cs_with_remainder() {
        let ds = line_dataset(&[5, 2]);
        let r = global_cs(&ds, &mut rng::seeded(3)).unwrap();
        assert_eq!(r.dataset.class_counts(), &[5, 5]);
        let mut a = [appearances(&r, 5), appearances(&r, 6)];
        a.sort();
        assert_eq!(a, [2, 3]);
    }

    #[test]
    fn global_cs_balanced_is_identity() {
        let ds = line_dataset(&[3, 3]);
        let r = global_cs(&ds, &mut rng::seeded(0)).unwrap();
        assert_eq!(r.dataset, ds);
    }

    #[test]
    fn interpolation_examples() {
        let mut r = rng::seeded(0);
        assert_eq!(smote_interpolate(&[1.5, -2.0], &[1.5, -2.0], &mut r), vec![1.5, -2.0]);
        for _ in 0..50 {
            let p = smote_interpolate(&[0.0, 0.0], &[2.0, 0.0], &mut r);
            assert!((0.0..2.0).contains(&p[0]) && p[1] == 0.0);
        }
    }

    #[test]
    fn static_smote_selection_trace() {
        // rounds: class 1 (2 -> 4), class 1 again on the 4-4 tie (-> 6), class 2 (4 -> 8)
        let ds = line_dataset(&[8, 2, 4]);
        let r = static_smote(&ds, &mut rng::seeded(1), 5).unwrap();
        assert_eq!(r.dataset.class_counts(), &[8, 6, 8]);
        for i in ds.n_rows()..r.dataset.n_rows() {
            assert_eq!(r.origin[i], Origin::Synthetic);
            let src = r.source[i].unwrap();
            assert_eq!(r.dataset.labels()[src], r.dataset.labels()[i]);
        }
    }

    #[test]
    fn static_smote_single_member_duplicates() {
        let ds = line_dataset(&[5, 1]);
        let r = static_smote(&ds, &mut rng::seeded(0), 5).unwrap();
        assert_eq!(r.origin[6], Origin::Duplicate);
        assert_eq!(r.dataset.features().row(6), ds.features().row(5));
    }

    #[test]
    fn mdo_small_class_duplicates() {
        let ds = line_dataset(&[6, 2]);
        let r = mdo(&ds, &mut rng::seeded(0), None).unwrap();
        assert_eq!(r.dataset.class_counts(), &[6, 6]);
        assert!(r.origin[8..].iter().all(|&o| o == Origin::Duplicate));
    }

    #[test]
    fn mdo_isotropic_class_keeps_radius() {
        // a cross of 4 points at radius 1 has isotropic covariance 2/3 I
        let mut rows: Vec<f64> = vec![1.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, -1.0];
        let mut labels = vec![1; 4];
        for i in 0..10 {
            rows.extend([20.0 + i as f64, 5.0]);
            labels.push(0);
        }
        let ds = Dataset::from_labels(Matrix::from_shape_vec((14, 2), rows).unwrap(), labels).unwrap();
        let r = mdo(&ds, &mut rng::seeded(2), None).unwrap();
        assert_eq!(r.dataset.class_counts(), &[10, 10]);
        for i in 14..20 {
            let p = r.dataset.features().row(i);
            assert!(((p[0] * p[0] + p[1] * p[1]).sqrt() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn originals_untouched_and_deterministic() {
        let ds = line_dataset(&[9, 4, 3]);
        for pre in [Preprocessor::GlobalCs, Preprocessor::StaticSmote, Preprocessor::Mdo] {
            let a = apply(pre, &ds, &mut rng::seeded(7)).unwrap();
            let b = apply(pre, &ds, &mut rng::seeded(7)).unwrap();
            assert_eq!(a, b);
            for i in 0..ds.n_rows() {
                assert_eq!(a.origin[i], Origin::Original);
                assert_eq!(a.dataset.features().row(i), ds.features().row(i));
            }
        }
    }

    #[test]
    fn one_class_is_rejected() {
        let ds = line_dataset(&[4]);
        assert!(global_cs(&ds, &mut rng::seeded(0)).is_err());
    }
}
