//! Runs the scenarios whose first tool result is not informative and shows the
//! planner returning to the same state with that tool excluded.

use waypoint::assets;
use waypoint::trace::EventKind;

fn main() {
    let config = assets::mock_config();
    for id in ["fungus", "torre"] {
        let question = assets::scenario(id).expect("shipped scenario").question();
        println!("== {}", question.question);
        let result = waypoint::run(&config, question);
        for event in &result.trace.events {
            match &event.kind {
                EventKind::PlannerDecision { state, tool, feasible, .. } => {
                    let options: Vec<&str> = feasible.iter().map(|a| a.as_str()).collect();
                    println!("at {state}: chose {tool} from [{}]", options.join(", "));
                }
                EventKind::Backtrack { state, tool } => println!("  backtrack: {tool} excluded at {state}"),
                EventKind::StateChange { from, to } => println!("  {from} => {to}"),
                _ => {}
            }
        }
        println!("{}: {}\n", result.status, result.answer.as_deref().unwrap_or("-"));
    }
}
