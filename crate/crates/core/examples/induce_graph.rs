//! Collects traces from the mock dataset, counts their transitions and turns
//! the counts into a loadable graph.

use waypoint::assets;
use waypoint::eval::{run_experiment, ExperimentConfig};
use waypoint::trace::induce_graph;
use waypoint::TransitionGraph;

fn main() {
    let config = assets::mock_config();
    let (_, traces) =
        run_experiment(&assets::dataset(), &config, &ExperimentConfig::agent("agent")).expect("valid experiment");
    let induced = induce_graph(&traces);
    print!("{}", induced.to_csv());

    let graph = induced.to_transition_graph().expect("induced graph is valid");
    let text = graph.serialize();
    println!("\n{text}");
    let reloaded = TransitionGraph::load(&text).expect("serialized graph loads");
    assert_eq!(reloaded.edge_count(), graph.edge_count());
}
