//! Evaluation metrics: root-mean-square error, prediction-percentage accuracy
//! within a tolerance, and argmax classification accuracy.

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// `sqrt( sum (pred - actual)^2 / (N * m) )`.
pub fn rmse(pred: &Matrix, actual: &Matrix) -> Result<f64> {
    if pred.rows() != actual.rows() || pred.cols() != actual.cols() {
        return Err(Error::Shape(format!(
            "prediction is {}x{}, actual is {}x{}",
            pred.rows(),
            pred.cols(),
            actual.rows(),
            actual.cols()
        )));
    }
    let n = pred.rows() * pred.cols();
    if n == 0 {
        return Err(Error::Shape("rmse of an empty matrix".into()));
    }
    let sum: f64 = pred
        .data()
        .iter()
        .zip(actual.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok((sum / n as f64).sqrt())
}

/// Fraction of predictions with absolute error strictly below `theta`.
pub fn ppa(pred: &[f64], actual: &[f64], theta: f64) -> Result<f64> {
    if pred.len() != actual.len() {
        return Err(Error::Shape(format!(
            "{} predictions vs {} actuals",
            pred.len(),
            actual.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::Shape("ppa of empty vectors".into()));
    }
    if theta.is_nan() || theta <= 0.0 {
        return Err(Error::Config(format!("theta must be positive, got {theta}")));
    }
    let hits = pred
        .iter()
        .zip(actual)
        .filter(|(p, a)| (*p - *a).abs() < theta)
        .count();
    Ok(hits as f64 / pred.len() as f64)
}

/// Predicted class of one score row: argmax, ties broken toward the lowest
/// index.
pub fn argmax_class(row: &[f64]) -> usize {
    let mut best = 0;
    for (j, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = j;
        }
    }
    best
}

/// Fraction of rows whose argmax matches the label.
pub fn accuracy(pred: &Matrix, labels: &[usize]) -> Result<f64> {
    if pred.cols() < 2 {
        return Err(Error::Shape("classification needs at least 2 classes".into()));
    }
    if pred.rows() != labels.len() {
        return Err(Error::Shape(format!(
            "{} prediction rows vs {} labels",
            pred.rows(),
            labels.len()
        )));
    }
    if labels.is_empty() {
        return Err(Error::Shape("accuracy of an empty prediction".into()));
    }
    let hits = (0..pred.rows())
        .filter(|&i| argmax_class(pred.row(i)) == labels[i])
        .count();
    Ok(hits as f64 / labels.len() as f64)
}

/// Decode one-hot (or general score) targets back to class indices.
pub fn decode_labels(targets: &Matrix) -> Vec<usize> {
    (0..targets.rows()).map(|i| argmax_class(targets.row(i))).collect()
}
