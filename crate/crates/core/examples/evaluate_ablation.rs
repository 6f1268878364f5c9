//! Scores the planner with each tool group removed and reports which tools
//! remained in use.

use waypoint::assets;
use waypoint::eval::{run_experiment, Ablation, ExperimentConfig};

fn main() {
    let config = assets::mock_config();
    let dataset = assets::dataset();
    let (full, _) = run_experiment(&dataset, &config, &ExperimentConfig::agent("full")).expect("valid experiment");
    println!("{:<18} {:>6.2}%", full.label, full.mean_accuracy * 100.0);
    for preset in ["search", "caption_vqa", "object"] {
        let ablation = Ablation::preset(preset).expect("known preset");
        let experiment = ExperimentConfig::agent("").with_ablation(ablation).with_workers(2);
        let (report, _) = run_experiment(&dataset, &config, &experiment).expect("valid experiment");
        let used: Vec<String> = report.tool_usage.keys().map(|t| t.to_string()).collect();
        println!(
            "{:<18} {:>6.2}%  used: {}",
            report.label,
            report.mean_accuracy * 100.0,
            used.join(", ")
        );
    }
    let unknown = Ablation::new("typo", ["web_serch"]);
    if let Err(e) = run_experiment(&dataset, &config, &ExperimentConfig::agent("x").with_ablation(unknown)) {
        println!("rejected: {e}");
    }
}
