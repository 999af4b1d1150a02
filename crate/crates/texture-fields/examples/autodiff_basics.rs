//! Tensors, reverse-mode gradients, and Adam on a toy problem.
//!
//! Run with: cargo run --example autodiff_basics

use texture_fields::autodiff::{AdamState, ParamStore, Tape, Tensor};

fn main() -> texture_fields::Result<()> {
    // d/dx sum(x*x) at x = 3 is 6
    let mut tape = Tape::<f64>::new();
    let x = tape.leaf(Tensor::from_vec(vec![1], vec![3.0])?.with_grad());
    let sq = tape.mul(x, x)?;
    let loss = tape.sum_all(sq)?;
    tape.backward(loss)?;
    println!("d/dx sum(x^2) at x=3: {:?}", tape.grad(x).unwrap());

    // fit a scalar to minimize (w - 4)^2 with Adam
    let mut store = ParamStore::<f64>::new();
    let w = store.add("w", Tensor::from_vec(vec![1], vec![0.0])?)?;
    let mut adam = AdamState::new(&store, 0.1);
    for step in 0..200 {
        let mut tape = Tape::new();
        let binding = store.bind(&mut tape);
        let wn = binding.node(w);
        let shifted = tape.add_const(wn, -4.0);
        let sq = tape.mul(shifted, shifted)?;
        let loss = tape.sum_all(sq)?;
        if step % 50 == 0 {
            println!("step {step}: loss {}", tape.data(loss)[0]);
        }
        tape.backward(loss)?;
        store.write_grads(&tape, &binding)?;
        adam.step(&mut store)?;
        store.zero_grads();
    }
    println!("fitted w = {} (target 4)", store.get(w).data()[0]);
    Ok(())
}
