//! Prints the three reference tables with their discrepancy notes.

fn main() {
    for which in 1..=3 {
        let t = peaks_core::gallery::reproduce_tables(which).expect("valid table id");
        println!("{}", t.render_text());
        println!("mismatching cells: {} of {}\n", t.mismatches().len(), t.scored_cells());
    }
}
