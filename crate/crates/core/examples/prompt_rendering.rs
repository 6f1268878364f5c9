//! Renders the planner prompt for the first decision of the golden question
//! and parses a few oracle replies against its feasible actions.

use waypoint::assets;
use waypoint::graph::StateId;
use waypoint::prompting::{parse_planner_output, parse_reasoner_output};
use waypoint::WorkingMemory;

fn main() {
    let prompts = assets::default_prompts();
    let exemplars = assets::default_exemplars();
    let graph = assets::default_graph();
    let question = assets::scenario(assets::GOLDEN_SCENARIO).expect("golden scenario").question();
    let memory = WorkingMemory::new(question);

    let feasible = graph.feasible_actions(&StateId::start(), &memory).expect("START exists");
    let selected = exemplars.select(&feasible, prompts.budget());
    let prompt = prompts.planner(&selected, &memory, &feasible, "").expect("planner prompt renders");
    println!("{}", prompt.text);
    println!("-- {} exemplars, {} chars", selected.len(), prompt.text.len());

    for reply in ["Action: object_detection", "Action: web_search", "I would look closer."] {
        match parse_planner_output(reply, &feasible) {
            Ok(decision) => println!("{reply:?} -> {}", decision.format()),
            Err(e) => println!("{reply:?} -> {e}"),
        }
    }
    for reply in ["This is not informative.", "The answer is 1942.", "It shows a motorcycle."] {
        println!("{reply:?} -> {}", parse_reasoner_output(reply).kind_name());
    }
}
