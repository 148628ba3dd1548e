//! The BM25 "major" selector favours long documents that share many terms
//! with the rest of the pool.

use clg::baselines::{bm25_major_select, Bm25Index, Bm25Params};

fn main() -> clg::Result<()> {
    let mut texts: Vec<String> = vec![
        "the film was great".into(),
        "a dull and slow plot".into(),
        "great acting and a fine score".into(),
        "the plot was thin".into(),
        "slow but great ending".into(),
        "fine film".into(),
    ];
    texts.push(
        "the film was great and the plot was slow but fine acting a dull score thin ending \
         the film the plot great slow fine dull"
            .into(),
    );
    let params = Bm25Params::default();
    let index = Bm25Index::new(&texts, params)?;
    let scores = index.major_scores();
    for (i, (t, s)) in texts.iter().zip(&scores).enumerate() {
        let words = t.split_whitespace().count();
        println!("{i}  {s:>7.4}  {words:>3} words  {t:.40}");
    }
    let sel = bm25_major_select(&texts, 2, params)?;
    println!("top 2: {:?}", sel.indices);
    Ok(())
}
