//! Walks the shipped transition graph by hand: feasible actions per state, how
//! an uninformative result shrinks them, and the graph-free alternative.

use waypoint::assets;
use waypoint::graph::{unconstrained_actions, ActionId, StateId};
use waypoint::{VisualQuestion, WorkingMemory};

fn show(label: &str, actions: impl IntoIterator<Item = ActionId>) {
    let names: Vec<String> = actions.into_iter().map(|a| a.to_string()).collect();
    println!("{label:<28} {}", names.join(", "));
}

fn main() {
    let graph = assets::default_graph();
    println!("{} states, {} edges", graph.states().len(), graph.edge_count());
    for (state, out) in graph.edges() {
        show(&format!("{state} ->"), out.iter().cloned());
    }
    println!();

    let mut memory = WorkingMemory::new(VisualQuestion::new("demo", "images/harley.jpg", "What is this?"));
    let start = StateId::start();
    show("feasible at START", graph.feasible_actions(&start, &memory).unwrap().into_vec());

    memory.record_uninformative(&ActionId::from("caption"));
    show("after caption was useless", graph.feasible_actions(&start, &memory).unwrap().into_vec());

    memory.record_informative(&ActionId::from("object_detection"), "a motorcycle", "detector");
    let state = memory.current_state().clone();
    show(&format!("feasible at {state}"), graph.feasible_actions(&state, &memory).unwrap().into_vec());

    let registry = assets::mock_registry();
    show("unconstrained at same state", unconstrained_actions(registry.names(), &memory, &state).into_vec());
}
