//! Code listings of the guide in `book/`, compiled and run as doc-tests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/parameters.md")]
pub mod parameters {}

#[doc = include_str!("../../../book/src/normal-ordering.md")]
pub mod normal_ordering {}

#[doc = include_str!("../../../book/src/secular-generator.md")]
pub mod secular_generator {}

#[doc = include_str!("../../../book/src/steady-states.md")]
pub mod steady_states {}

#[doc = include_str!("../../../book/src/time-evolution.md")]
pub mod time_evolution {}

#[doc = include_str!("../../../book/src/observables.md")]
pub mod observables {}

#[doc = include_str!("../../../book/src/full-model.md")]
pub mod full_model {}

#[doc = include_str!("../../../book/src/command-line.md")]
pub mod command_line {}
