use numertree::dectree::DectreeError;
use numertree::gdlr::GdlrError;
use numertree::kernels::KernelError;
use numertree::linearity::LinearityError;
use numertree::numsys::NumsysError;
use numertree::seqlib::SeqError;

pub const EXIT_VERIFY: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;
pub const EXIT_INSUFFICIENT: i32 = 4;

/// A failure reported as one JSON line on standard error.
#[derive(Debug)]
pub struct CliError {
    pub kind: &'static str,
    pub message: String,
    pub exit: i32,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        CliError {
            kind: "invalid_input",
            message: message.into(),
            exit: EXIT_INPUT,
        }
    }

    pub fn insufficient(message: impl Into<String>) -> Self {
        CliError {
            kind: "insufficient_data",
            message: message.into(),
            exit: EXIT_INSUFFICIENT,
        }
    }

    pub fn verification(message: impl Into<String>) -> Self {
        CliError {
            kind: "verification_failed",
            message: message.into(),
            exit: EXIT_VERIFY,
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::json!({ "error": self.kind, "message": self.message, "exit": self.exit }).to_string()
    }
}

fn tree_kind(e: &DectreeError) -> (&'static str, i32) {
    match e {
        DectreeError::BudgetExceeded { .. } => ("budget_exceeded", EXIT_BUDGET),
        DectreeError::InsufficientLevels { .. } => ("insufficient_data", EXIT_INSUFFICIENT),
        _ => ("invalid_input", EXIT_INPUT),
    }
}

fn seq_kind(e: &SeqError) -> (&'static str, i32) {
    match e {
        SeqError::Tree(t) => tree_kind(t),
        SeqError::Linearity(l) => linearity_kind(l),
        _ => ("invalid_input", EXIT_INPUT),
    }
}

fn linearity_kind(e: &LinearityError) -> (&'static str, i32) {
    match e {
        LinearityError::Tree(t) => tree_kind(t),
        LinearityError::ShortPrefix { .. }
        | LinearityError::MissingRelation { .. }
        | LinearityError::UncoveredType(_) => ("insufficient_data", EXIT_INSUFFICIENT),
        _ => ("invalid_input", EXIT_INPUT),
    }
}

fn gdlr_kind(e: &GdlrError) -> (&'static str, i32) {
    match e {
        GdlrError::Linearity(l) => linearity_kind(l),
        GdlrError::Tree(t) => tree_kind(t),
        GdlrError::MissingType(_) | GdlrError::MissingRelation { .. } | GdlrError::RootFit(_) => {
            ("unverified", EXIT_INSUFFICIENT)
        }
        _ => ("invalid_input", EXIT_INPUT),
    }
}

fn kernel_kind(e: &KernelError) -> (&'static str, i32) {
    match e {
        KernelError::Seq(s) => seq_kind(s),
        KernelError::Tree(t) => tree_kind(t),
        _ => ("invalid_input", EXIT_INPUT),
    }
}

macro_rules! classify {
    ($ty:ty, $f:expr) => {
        impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                let (kind, exit) = $f(&e);
                CliError {
                    kind,
                    message: e.to_string(),
                    exit,
                }
            }
        }
    };
}

classify!(NumsysError, |_: &NumsysError| ("invalid_input", EXIT_INPUT));
classify!(DectreeError, tree_kind);
classify!(SeqError, seq_kind);
classify!(LinearityError, linearity_kind);
classify!(GdlrError, gdlr_kind);
classify!(KernelError, kernel_kind);

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::input(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::input(format!("malformed JSON: {e}"))
    }
}
