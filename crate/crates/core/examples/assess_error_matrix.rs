//! Score a classification from its error matrix: overall accuracy, kappa,
//! producer percentages and the printed report. The counts are a three-class
//! scene with a row of unclassified pixels.
//!
//!     cargo run --example assess_error_matrix

use specmap::assessment::{chance_agreement, format_report, kappa, overall_accuracy, percent_matrix, ConfusionMatrix};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Rows are predicted labels (0 = unclassified), columns ground truth.
    let cm = ConfusionMatrix::from_counts(vec![
        vec![136, 5, 2],
        vec![65367, 1, 0],
        vec![0, 1514, 0],
        vec![0, 0, 1022],
    ])?;

    println!("N = {}, correct = {}", cm.grand_total(), cm.hits());
    println!("overall accuracy {:.6}", overall_accuracy(&cm)?);
    println!("chance agreement {:.6}", chance_agreement(&cm)?);
    println!("kappa            {:.4}", kappa(&cm)?);

    let pm = percent_matrix(&cm)?;
    for t in 1..=cm.num_classes() {
        println!("producer's accuracy, class {t}: {:.2}%", pm.cells[t][t - 1]);
    }

    let names = ["Red", "Green", "Blue"].map(String::from);
    print!("\n{}", format_report(&cm, &names)?);
    Ok(())
}
