//! Pairwise-masked aggregation: individual submissions look random, the sum
//! decodes to the weighted total.

use hiercoord::privacy::{masked_submissions, secure_aggregate, AggregationField, KnowledgeVector};
use hiercoord::Result;

fn main() -> Result<()> {
    let field = AggregationField::default();
    let contributions = vec![
        (KnowledgeVector(vec![0.25, -0.5]), 1.0),
        (KnowledgeVector(vec![0.75, 0.125]), 0.5),
        (KnowledgeVector(vec![-0.1, 0.3]), 1.0),
    ];
    for (i, s) in masked_submissions(&contributions, &field, 42)?.iter().enumerate() {
        println!("submission {i}: {:?}", s.iter().map(|e| e.0).collect::<Vec<_>>());
    }
    let total = secure_aggregate(&contributions, &field, 42)?;
    println!("decoded sum: {:?}", total.values());
    Ok(())
}
