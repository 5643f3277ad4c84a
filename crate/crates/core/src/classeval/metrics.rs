use crate::{Error, Result};

/// `counts[t][p]`: rows of true class `t` predicted as `p`.
pub fn confusion_matrix(y_true: &[usize], y_pred: &[usize], n_classes: usize) -> Result<Vec<Vec<usize>>> {
    if y_true.len() != y_pred.len() {
        return Err(Error::dim("predictions", y_true.len(), y_pred.len()));
    }
    let mut m = vec![vec![0usize; n_classes]; n_classes];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        if t >= n_classes || p >= n_classes {
            return Err(Error::InvalidArgument(format!(
                "label {} outside 0..{n_classes}",
                t.max(p)
            )));
        }
        m[t][p] += 1;
    }
    Ok(m)
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Per-class recall `TP / (TP + FN)`; 0 for a class absent from `y_true`.
pub fn recalls(y_true: &[usize], y_pred: &[usize], n_classes: usize) -> Result<Vec<f64>> {
    let m = confusion_matrix(y_true, y_pred, n_classes)?;
    Ok((0..n_classes).map(|c| ratio(m[c][c], m[c].iter().sum())).collect())
}

/// Unweighted mean of per-class F1 over all `n_classes`, with every 0/0
/// taken as 0.
pub fn macro_f1(y_true: &[usize], y_pred: &[usize], n_classes: usize) -> Result<f64> {
    let m = confusion_matrix(y_true, y_pred, n_classes)?;
    if n_classes == 0 {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for c in 0..n_classes {
        let tp = m[c][c];
        let actual: usize = m[c].iter().sum();
        let predicted: usize = m.iter().map(|row| row[c]).sum();
        let p = ratio(tp, predicted);
        let r = ratio(tp, actual);
        total += if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    }
    Ok(total / n_classes as f64)
}

/// Geometric mean of the recalls of all `n_classes`. Every class must occur
/// in `y_true`.
pub fn gmean_multiclass(y_true: &[usize], y_pred: &[usize], n_classes: usize) -> Result<f64> {
    let m = confusion_matrix(y_true, y_pred, n_classes)?;
    if let Some(c) = (0..n_classes).find(|&c| m[c].iter().sum::<usize>() == 0) {
        return Err(Error::InvalidArgument(format!("class {c} does not occur in y_true")));
    }
    Ok(root_of_product(&recalls(y_true, y_pred, n_classes)?))
}

/// Geometric mean of the recalls of the classes that occur in `y_true`.
pub fn gmean_over_present(y_true: &[usize], y_pred: &[usize], n_classes: usize) -> Result<f64> {
    let m = confusion_matrix(y_true, y_pred, n_classes)?;
    let r: Vec<f64> = (0..n_classes)
        .filter(|&c| m[c].iter().sum::<usize>() > 0)
        .map(|c| ratio(m[c][c], m[c].iter().sum()))
        .collect();
    Ok(root_of_product(&r))
}

fn root_of_product(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().product::<f64>().powf(1.0 / values.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_predictions() {
        let y = [0, 1, 2, 2, 1];
        assert_eq!(macro_f1(&y, &y, 3).unwrap(), 1.0);
        assert_eq!(gmean_multiclass(&y, &y, 3).unwrap(), 1.0);
    }

    #[test]
    fn hand_confusion_matrix() {
        let f1 = macro_f1(&[0, 0, 1, 1], &[0, 0, 0, 0], 2).unwrap();
        assert!((f1 - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(gmean_multiclass(&[0, 0, 1, 1], &[0, 0, 0, 0], 2).unwrap(), 0.0);
        assert_eq!(gmean_multiclass(&[0, 0, 1, 1], &[0, 1, 0, 1], 2).unwrap(), 0.5);
    }

    #[test]
    fn absent_class_counts_in_macro_f1_but_fails_gmean() {
        assert_eq!(macro_f1(&[0, 0], &[0, 0], 2).unwrap(), 0.5);
        assert!(gmean_multiclass(&[0, 0], &[0, 0], 2).is_err());
        assert_eq!(gmean_over_present(&[0, 0], &[0, 0], 2).unwrap(), 1.0);
    }

    #[test]
    fn out_of_range_label_fails() {
        assert!(macro_f1(&[0, 3], &[0, 0], 2).is_err());
    }
}
