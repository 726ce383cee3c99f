//! The coproduct on planar trees and its identities.
//!
//! Run with `cargo run --example coalgebra`.

use butcher_control::tree::{coproduct_left_iterated, coproduct_right_iterated, enumerate_trees};
use butcher_control::PlanarTree;

fn main() -> butcher_control::Result<()> {
    for enc in ["(oo)", "((oo)o)", "((ooo)o)"] {
        let b: PlanarTree = enc.parse()?;
        println!("cop({b}) = {}", b.coproduct());
    }

    let trees = enumerate_trees(6);
    let coassociative = trees
        .iter()
        .all(|b| coproduct_left_iterated(b) == coproduct_right_iterated(b));
    println!("\ncoassociative on all {} trees with N <= 6: {coassociative}", trees.len());

    let b: PlanarTree = "((oo)(oo))".parse()?;
    let triple = coproduct_left_iterated(&b);
    println!("(cop ⊗ id) cop({b}) has {} terms", triple.len());
    Ok(())
}
