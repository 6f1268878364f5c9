//! Answers the motorcycle question with the shipped mock oracle and tools,
//! printing every planner decision and the final answer.

use waypoint::assets;
use waypoint::trace::EventKind;

fn main() {
    let config = assets::mock_config();
    let question = assets::scenario(assets::GOLDEN_SCENARIO).expect("golden scenario").question();
    println!("Q: {}  [{}]", question.question, question.image_ref);

    let result = waypoint::run(&config, question);
    for event in &result.trace.events {
        match &event.kind {
            EventKind::Decomposition { visual, knowledge, .. } => {
                println!("visual: {visual}");
                println!("knowledge: {knowledge}");
            }
            EventKind::PlannerDecision { state, tool, query, .. } if query.is_empty() => println!("{state} -> {tool}"),
            EventKind::PlannerDecision { state, tool, query, .. } => println!("{state} -> {tool}  ({query})"),
            EventKind::ReasonerVerdict { verdict, .. } => println!("    {}", verdict.kind_name()),
            EventKind::PhaseSwitch { query, .. } => println!("now asking: {query}"),
            _ => {}
        }
    }
    println!("{}: {}", result.status, result.answer.as_deref().unwrap_or("-"));
}
