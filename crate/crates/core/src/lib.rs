pub mod category;
pub mod exec;
pub mod export;
pub mod fixtures;
pub mod forge;
pub mod model;
pub mod oracle;
pub mod refine;
pub mod rubric;
