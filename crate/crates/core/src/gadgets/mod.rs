//! Gadget generators, parameter planners and witness decompositions.

pub mod plan;
pub mod pw;
pub mod tw;
pub mod tw_td;

pub use plan::{bounds, plan_pw, plan_tw, verify_pw, verify_tw, Bounds, Check, PlanReport, PwPlan, TwPlan};
pub use pw::{
    build_pw_g, build_pw_h, canonical_pd_pw, make_bicol, make_bicolit, make_gadget, PwParams,
};
pub use tw::{
    attach_word_label, build_tw, build_tw_g, build_tw_h, loz_size, make_loz, tw_links, word_labels, TwParams, TwSide,
    TwStage, NODE_CAP,
};
pub use tw_td::{canonical_td_tw, series_parallel_decomposition, sweep_decomposition, TwVariant};
