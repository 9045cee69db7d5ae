//! Start-point strategies: baselines, MAML, and the learned selectors.

mod learners;
mod maml;
mod phase1;
mod propose;
mod records_io;

pub use learners::{learner_input, train_arg_init, train_val_init, train_vanilla, vanilla_input, LearnerSpec};
pub use maml::{maml_train, MamlConfig};
pub use phase1::{collect_paired_phase1, collect_phase1, PairedRecord, Phase1Record};
pub use propose::{
    argmin_first, propose, sigmoid, val_init_scores, vanilla_probability, Initializer, InitializerKind, Proposal,
    TrainedModels, ZERO_NOISE,
};
pub use records_io::{fmt_f64, read_paired_csv, read_phase1_csv, write_paired_csv, write_phase1_csv};
