//! Distribution discrepancies, a Bayes update and confusion-matrix metrics.

use uqflow::metrics::{
    average_precision, bayes_update, class_metrics, js_distance, kl_divergence, Averaging, ConfusionMatrix,
    DiscreteDistribution, LogBase,
};

fn main() -> uqflow::Result<()> {
    let q = DiscreteDistribution::new(vec![0.5, 0.5])?;
    let p = DiscreteDistribution::new(vec![0.25, 0.75])?;
    println!("KL(q||p) = {:.5} bits", kl_divergence(&q, &p)?);
    println!(
        "KL(q||p) = {:.5} nats",
        kl_divergence(&q.clone().with_base(LogBase::E), &p.clone().with_base(LogBase::E))?
    );
    println!("JSD(q, p) = {:.5} = JSD(p, q) = {:.5}", js_distance(&q, &p)?, js_distance(&p, &q)?);

    let prior = DiscreteDistribution::new(vec![0.3, 0.7])?;
    println!("posterior {:?}", bayes_update(&prior, &[0.5, 0.1])?.masses());

    let cm = ConfusionMatrix::from_predictions(3, &[0, 0, 0, 1, 1, 1, 2, 2, 2, 2], &[0, 0, 1, 1, 1, 2, 2, 2, 2, 0])?;
    for m in class_metrics(&cm) {
        println!("class {}: precision {:?} recall {:?} f1 {:?}", m.class, m.precision, m.recall, m.f1);
    }
    println!("macro precision {:.4}", average_precision(&cm, Averaging::Macro)?.value);
    cm.write_csv(std::io::stdout().lock())
}
