use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use super::graph::{Graph, Op, Var};
use super::{Tensor, TensorError};

impl Graph {
    /// Exponential linear unit with alpha = 1.
    pub fn elu(&mut self, input: Var) -> Result<Var, TensorError> {
        let x = self.value(input);
        let data: Vec<f64> = x
            .data()
            .iter()
            .map(|&v| if v > 0.0 { v } else { v.exp_m1() })
            .collect();
        let value = Tensor::new(x.shape().to_vec(), data)?;
        self.push("elu", value, Op::Elu { input }, &[input])
    }

    pub fn square(&mut self, input: Var) -> Result<Var, TensorError> {
        let x = self.value(input);
        let data = x.data().iter().map(|v| v * v).collect();
        let value = Tensor::new(x.shape().to_vec(), data)?;
        self.push("square", value, Op::Square { input }, &[input])
    }

    /// `ln(max(x, floor))`; the gradient is zero where the floor is active.
    pub fn log_clamp(&mut self, input: Var, floor: f64) -> Result<Var, TensorError> {
        let x = self.value(input);
        let data = x.data().iter().map(|&v| v.max(floor).ln()).collect();
        let value = Tensor::new(x.shape().to_vec(), data)?;
        self.push("log", value, Op::LogClamp { input, floor }, &[input])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn elu_values() {
        let mut g = Graph::new();
        let x = g.leaf(
            Tensor::new(alloc::vec![3], alloc::vec![-1.0, 0.0, 2.0]).unwrap(),
            false,
        );
        let y = g.elu(x).unwrap();
        let d = g.value(y).data();
        assert!((d[0] - ((-1.0f64).exp() - 1.0)).abs() < 1e-15);
        assert_eq!(&d[1..], &[0.0, 2.0]);
    }

    #[test]
    fn log_clamp_floor() {
        let mut g = Graph::new();
        let x = g.leaf(
            Tensor::new(alloc::vec![2], alloc::vec![0.0, 1.0]).unwrap(),
            true,
        );
        let y = g.log_clamp(x, 1e-6).unwrap();
        assert!((g.value(y).data()[0] - (1e-6f64).ln()).abs() < 1e-12);
        let s = g.sum(y).unwrap();
        g.backward(s).unwrap();
        assert_eq!(g.grad_data(x).unwrap(), &[0.0, 1.0]);
    }
}
