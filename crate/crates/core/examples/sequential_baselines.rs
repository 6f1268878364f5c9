//! Compares the three fixed tool pipelines with the planner on the mock
//! dataset.

use waypoint::assets;
use waypoint::engine::BASELINES;
use waypoint::eval::{run_experiment, ExperimentConfig};

fn main() {
    let config = assets::mock_config();
    let dataset = assets::dataset();
    let mut experiments = vec![ExperimentConfig::agent("planner")];
    for (name, pipeline) in BASELINES {
        experiments.push(ExperimentConfig::baseline(name, pipeline.iter().copied()));
    }
    for experiment in &experiments {
        let (report, traces) = run_experiment(&dataset, &config, experiment).expect("valid experiment");
        let calls: usize = traces.iter().map(|t| t.tool_calls().len()).sum();
        println!(
            "{:<14} accuracy {:>6.2}%  tool calls {calls}",
            report.label,
            report.mean_accuracy * 100.0
        );
    }
}
