pub mod calendar;
pub mod dateparse;
pub mod icu;
pub mod locale;
pub mod grammar;
pub mod corpus;
pub mod detection;
pub mod pcfg;
pub mod mdl;
pub mod synth;
pub mod crossval;
