use serde::{Deserialize, Serialize};

use super::TrainError;

/// Rows are true classes, columns predictions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub matrix: [[usize; 3]; 3],
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.matrix.iter().flatten().sum()
    }

    pub fn correct(&self) -> usize {
        (0..3).map(|i| self.matrix[i][i]).sum()
    }

    pub fn accuracy(&self) -> f64 {
        match self.total() {
            0 => 0.0,
            t => self.correct() as f64 / t as f64,
        }
    }
}

pub fn confusion(predictions: &[usize], labels: &[usize]) -> Result<Confusion, TrainError> {
    if predictions.len() != labels.len() {
        return Err(TrainError::Length {
            predictions: predictions.len(),
            labels: labels.len(),
        });
    }
    let mut matrix = [[0usize; 3]; 3];
    for (&p, &l) in predictions.iter().zip(labels) {
        if p > 2 || l > 2 {
            return Err(TrainError::Label { label: p.max(l) });
        }
        matrix[l][p] += 1;
    }
    Ok(Confusion { matrix })
}
