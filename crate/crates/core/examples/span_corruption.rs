//! Span-corrupt a sentence and invert the corruption.

use taskmix::corruption::{corrupt_text, parse_rendered, plan_spans, reconstruct, CorruptionConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let text = "Thank you for inviting me to your party last week . It was a lot of fun and the food was delicious";
    for (density, seed) in [(0.15, 1), (0.3, 2), (0.0, 3)] {
        let cfg = CorruptionConfig::new(density, 3.0, seed)?;
        let n = text.split_whitespace().count();
        let spans = plan_spans(n, &cfg, 0)?;
        let (input, target) = corrupt_text(text, &cfg, 0)?;
        println!("density {density}: spans {spans:?}");
        println!("  input:  {input}");
        println!("  target: {target}");
        let back = reconstruct(&parse_rendered(&input, &target))?.join(" ");
        assert_eq!(back, text);
    }
    Ok(())
}
