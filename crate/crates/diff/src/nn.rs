//! Composite layers built from primitive ops: linear projections, 2-layer
//! MLPs and an LSTM cell. Gradients come for free from the tape.

use crate::error::Result;
use crate::tape::Tensor;

/// `x W^T + b` with `w: [out, in]`, `b: [1, out]`, `x: [batch, in]`.
pub fn linear(x: &Tensor, w: &Tensor, b: &Tensor) -> Result<Tensor> {
    x.matmul_nt(w)?.add_row(b)
}

/// Two-layer MLP with ReLU: `relu(x W1^T + b1) W2^T + b2`.
pub fn mlp2(x: &Tensor, w1: &Tensor, b1: &Tensor, w2: &Tensor, b2: &Tensor) -> Result<Tensor> {
    linear(&linear(x, w1, b1)?.relu()?, w2, b2)
}

/// Weights of one LSTM cell with hidden width `h` over inputs of width
/// `i`: four gates, each with input projection `[h, i]`, recurrent
/// projection `[h, h]` and bias `[1, h]`.
pub struct LstmWeights<'a> {
    pub w_x: [&'a Tensor; 4],
    pub w_h: [&'a Tensor; 4],
    pub b: [&'a Tensor; 4],
}

/// One LSTM step: `(x [B, i], h [B, h], c [B, h]) -> (h', c')` with the
/// gate order (input, forget, cell, output).
pub fn lstm_cell(
    x: &Tensor,
    h: &Tensor,
    c: &Tensor,
    w: &LstmWeights,
) -> Result<(Tensor, Tensor)> {
    let gate = |k: usize| -> Result<Tensor> {
        x.matmul_nt(w.w_x[k])?
            .add(&h.matmul_nt(w.w_h[k])?)?
            .add_row(w.b[k])
    };
    let i = gate(0)?.sigmoid()?;
    let f = gate(1)?.sigmoid()?;
    let g = gate(2)?.tanh()?;
    let o = gate(3)?.sigmoid()?;
    let c_next = f.mul(c)?.add(&i.mul(&g)?)?;
    let h_next = o.mul(&c_next.tanh()?)?;
    Ok((h_next, c_next))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ParamStore;
    use crate::tape::Tape;

    #[test]
    fn linear_shapes() {
        let tape = Tape::new();
        let x = tape.leaf(3, 4, vec![0.1; 12]).unwrap();
        let w = tape.leaf(2, 4, vec![0.2; 8]).unwrap();
        let b = tape.leaf(1, 2, vec![0.0, 1.0]).unwrap();
        let y = linear(&x, &w, &b).unwrap();
        assert_eq!(y.shape(), (3, 2));
    }

    #[test]
    fn lstm_cell_runs_and_differentiates() {
        let mut store = ParamStore::new();
        let mut ids = Vec::new();
        for gate in ["i", "f", "g", "o"] {
            ids.push(store.register(&format!("wx_{gate}"), 3, 2, vec![0.1; 6]));
            ids.push(store.register(&format!("wh_{gate}"), 3, 3, vec![0.05; 9]));
            ids.push(store.register(&format!("b_{gate}"), 1, 3, vec![0.0; 3]));
        }
        let tape = Tape::new();
        let ts: Vec<_> = ids.iter().map(|&id| tape.param(&store, id).unwrap()).collect();
        let w = LstmWeights {
            w_x: [&ts[0], &ts[3], &ts[6], &ts[9]],
            w_h: [&ts[1], &ts[4], &ts[7], &ts[10]],
            b: [&ts[2], &ts[5], &ts[8], &ts[11]],
        };
        let x = tape.leaf(1, 2, vec![0.3, -0.4]).unwrap();
        let h = tape.leaf(1, 3, vec![0.0; 3]).unwrap();
        let c = tape.leaf(1, 3, vec![0.0; 3]).unwrap();
        let (h1, c1) = lstm_cell(&x, &h, &c, &w).unwrap();
        assert_eq!(h1.shape(), (1, 3));
        let loss = h1.add(&c1).unwrap().sum_all().unwrap();
        tape.backward(&loss, &mut store).unwrap();
    }
}
