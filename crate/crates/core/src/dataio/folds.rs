use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;

use crate::{rng, Error, Result};

/// Fold index of every row, plus diagnostics about under-populated classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldAssignment {
    pub fold_of: Vec<usize>,
    pub k: usize,
    pub warnings: Vec<String>,
}

impl FoldAssignment {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len()).filter(|&i| self.fold_of[i] == fold).collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len()).filter(|&i| self.fold_of[i] != fold).collect()
    }

    /// Writes `row_index,fold` lines under a header.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "row_index,fold")?;
        for (i, f) in self.fold_of.iter().enumerate() {
            writeln!(w, "{i},{f}")?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
            .map_err(|e| Error::io(path, e))
    }
}

/// Stratified K-fold assignment.
///
/// Each class's row indices are shuffled with a generator seeded by `seed`
/// and dealt to folds round-robin. The dealing position carries over from
/// one class to the next, so small classes land in different folds instead
/// of always filling fold 0 first.
pub fn stratified_kfold(labels: &[usize], k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("fold count must be >= 2, got {k}")));
    }
    let n_classes = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut per_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, &y) in labels.iter().enumerate() {
        per_class[y].push(i);
    }

    let mut rng = rng::seeded(seed);
    let mut fold_of = vec![0usize; labels.len()];
    let mut warnings = Vec::new();
    let mut next = 0usize;
    for (c, members) in per_class.iter_mut().enumerate() {
        if members.is_empty() {
            continue;
        }
        if members.len() < k {
            warnings.push(format!(
                "class {c} has {} rows, fewer than {k} folds; some test folds lack it",
                members.len()
            ));
        }
        members.shuffle(&mut rng);
        for &i in members.iter() {
            fold_of[i] = next;
            next = (next + 1) % k;
        }
    }
    Ok(FoldAssignment {
        fold_of,
        k,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(fa: &FoldAssignment, labels: &[usize], class: usize) -> Vec<usize> {
        let mut out = vec![0; fa.k];
        for (i, &y) in labels.iter().enumerate() {
            if y == class {
                out[fa.fold_of[i]] += 1;
            }
        }
        out
    }

    #[test]
    fn exact_divisibility() {
        let labels = [0, 0, 0, 0, 1, 1, 1, 1];
        let fa = stratified_kfold(&labels, 2, 3).unwrap();
        assert_eq!(counts(&fa, &labels, 0), vec![2, 2]);
        assert_eq!(counts(&fa, &labels, 1), vec![2, 2]);
        assert!(fa.warnings.is_empty());
    }

    #[test]
    fn uneven_class_spread_within_one() {
        let labels = [0, 0, 0, 0, 0, 1, 1, 1];
        let fa = stratified_kfold(&labels, 5, 11).unwrap();
        let c1 = counts(&fa, &labels, 1);
        assert!(c1.iter().max().unwrap() - c1.iter().min().unwrap() <= 1);
        assert_eq!(fa.warnings.len(), 1);
    }

    #[test]
    fn deterministic_per_seed() {
        let labels: Vec<usize> = (0..50).map(|i| i % 3).collect();
        assert_eq!(
            stratified_kfold(&labels, 5, 9).unwrap(),
            stratified_kfold(&labels, 5, 9).unwrap()
        );
    }

    #[test]
    fn rejects_single_fold() {
        assert!(stratified_kfold(&[0, 1], 1, 0).is_err());
    }

    #[test]
    fn csv_export() {
        let fa = stratified_kfold(&[0, 1, 0, 1], 2, 0).unwrap();
        let mut buf = Vec::new();
        fa.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("row_index,fold\n0,"));
        assert_eq!(text.lines().count(), 5);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn stratified_partition(
                labels in prop::collection::vec(0usize..4, 1..120),
                k in 2usize..7,
                seed in any::<u64>(),
            ) {
                let fa = stratified_kfold(&labels, k, seed).unwrap();
                prop_assert_eq!(fa.fold_of.len(), labels.len());
                prop_assert!(fa.fold_of.iter().all(|&f| f < k));
                for c in 0..4 {
                    let cc = counts(&fa, &labels, c);
                    prop_assert!(cc.iter().max().unwrap() - cc.iter().min().unwrap() <= 1);
                }
                let mut seen = vec![false; labels.len()];
                for f in 0..k {
                    for i in fa.test_indices(f) {
                        prop_assert!(!seen[i]);
                        seen[i] = true;
                    }
                }
                prop_assert!(seen.iter().all(|&s| s));
            }
        }
    }
}
