use thiserror::Error;

use crate::catalog::CatalogError;
use crate::cdr::CdrError;
use crate::darboux::DarbouxError;
use crate::expr::EvalError;
use crate::numerics::NumericsError;
use crate::similarity::SimilarityError;
use crate::syntax::ParseError;

/// Any error raised by this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Cdr(#[from] CdrError),
    #[error(transparent)]
    Darboux(#[from] DarbouxError),
    #[error(transparent)]
    Similarity(#[from] SimilarityError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
}
