//! Fixed environment replies.

use crate::domain::{AspectKind, Mode};

pub const SEARCH_ALIGNED: &str = "You have provided the correct search request arguments.";

pub const SEARCH_SYSTEM_ERROR: &str =
    "System error: the search service is temporarily unavailable and your request could not be processed. Please try again.";

pub const SEARCH_NO_MATCH: &str = "No results were found for your search request. Please issue one focused search for a single travel aspect with complete and correct arguments.";

pub const TYPE2_REPLY: &str = "This is a good question. However, I do not have specific preference in the aspect you ask about yet (or maybe I have already elicited that to you before). You may continue to ask me about other detailed and specific preferences.";

pub const TYPE3_REPLY: &str = "Your question is too vague and general, and I am not sure how to respond to it. Please ask me about some specific aspects of my preferences, in a more detailed and concrete way, so that I can provide you with a more accurate response.";

pub const ANSWER_WRONG: &str = "Your chosen options do not contain any of the best or correct options. Please continue your interaction focusing on other travel aspects.";

pub const ANSWER_NO_ID: &str =
    "No option ID was found in your answer. Please provide the ID of one option from the search results.";

pub fn already_searched(aspect: AspectKind) -> String {
    format!(
        "You have already got the search results for <{}>. Please directly refer to the previous search results.",
        aspect.as_str()
    )
}

pub fn answer_best(mode: Mode) -> &'static str {
    match mode {
        Mode::SingleChoice => "Your chosen options contain the best option! Your choice is recorded and do not choose options of this travel aspect again. Please continue your interaction and reasoning focusing on other travel aspects.",
        Mode::MultiChoice => "Your chosen options contain the best option! Your choice is recorded. Please continue your interaction focusing on other travel aspects.",
    }
}

pub fn answer_correct(mode: Mode) -> &'static str {
    match mode {
        Mode::SingleChoice => "Your chosen options contain a correct option, but not the best one. Your choice is recorded and do not choose options of this travel aspect again. Please continue your interaction and reasoning focusing on other travel aspects.",
        Mode::MultiChoice => "Your chosen options contain a correct option, but not the best one. Your choice is recorded. Please continue your interaction focusing on other travel aspects.",
    }
}

pub fn repeat_answer(initial: char) -> String {
    format!(
        "You have already recommended an option with the same initial '{initial}'. You are allowed to recommend only one option per travel aspect."
    )
}

pub fn multiple_ids(mode: Mode, count: usize) -> String {
    match mode {
        Mode::SingleChoice => format!(
            "Your answer contains {count} option IDs. Please recommend exactly one option ID per answer; nothing was recorded."
        ),
        Mode::MultiChoice => format!(
            "Your answer contains {count} option IDs, but each answer should include only one option ID; nothing was recorded."
        ),
    }
}

pub fn unknown_option(id: &str) -> String {
    format!("Option {id} does not exist in the database. Please choose an option ID from the search results.")
}

pub fn malformed_call(detail: &str) -> String {
    format!("Invalid tool call: {detail}. The choice must be one of search, action, or answer.")
}
