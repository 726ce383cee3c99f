//! Enumerates planar trees and shows their basic statistics.
//!
//! Run with `cargo run --example trees`.

use butcher_control::tree::enumerate_trees;
use butcher_control::PlanarTree;

fn main() -> butcher_control::Result<()> {
    let trees = enumerate_trees(7);
    println!("{:<16} {:>6} {:>8} {:>4}", "tree", "leaves", "internal", "N");
    for b in &trees {
        println!("{:<16} {:>6} {:>8} {:>4}", b.encoding(), b.leaves(), b.internal(), b.order());
    }

    println!("\ncounts by leaf number (small Schröder numbers):");
    let all = enumerate_trees(11);
    for k in 1..=6 {
        let count = all.iter().filter(|b| b.leaves() == k).count();
        println!("  {k} leaves: {count}");
    }

    // B+ joins a forest under a new root, B- removes the root again
    let b = PlanarTree::b_plus(vec!["(oo)".parse()?, PlanarTree::leaf(), PlanarTree::leaf()])?;
    println!("\nB+((oo), o, o) = {b}, B-({b}) = {}", b.b_minus()?);

    // grafting replaces the leaves of the lower tree, left to right
    let lower: PlanarTree = "(oo)".parse()?;
    let grafted = PlanarTree::graft(&["(ooo)".parse()?, PlanarTree::leaf()], &lower)?;
    println!("(ooo)•o grafted on (oo) = {grafted}");
    Ok(())
}
