use svt_engine::capacity::CapacityError;
use svt_engine::chunk::ChunkError;
use svt_engine::container::ContainerError;
use svt_engine::ingest::IngestError;
use svt_engine::render::RenderError;
use svt_engine::svt::SvtError;
use svt_engine::upload::UploadError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_CAPACITY: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot read transfer function: {0}")]
    Lut(RenderError),
    #[error("{1}")]
    DoesNotFit(&'static str, String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Svt(#[from] SvtError),
    #[error(transparent)]
    Container(#[from] ContainerError),
    #[error(transparent)]
    Upload(#[from] UploadError),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error(transparent)]
    Chunk(#[from] ChunkError),
    #[error(transparent)]
    Capacity(#[from] CapacityError),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("unrecognized file: {0}")]
    UnknownFile(String),
}

impl CliError {
    pub fn usage(m: impl Into<String>) -> Self {
        CliError::Usage(m.into())
    }

    /// Stable reason tag and exit code.
    pub fn reason(&self) -> (&'static str, i32) {
        use CliError::*;
        match self {
            Usage(_) => ("UsageError", EXIT_USAGE),
            Lut(_) => ("BadLut", EXIT_DATA),
            DoesNotFit(tag, _) => (tag, EXIT_CAPACITY),
            Ingest(e) => (ingest_reason(e), EXIT_DATA),
            Svt(e) => svt_reason(e),
            Container(e) => match e {
                ContainerError::Io { .. } => ("IoError", EXIT_DATA),
                ContainerError::Corrupt(_) => ("CorruptContainer", EXIT_DATA),
                ContainerError::Upload(u) => upload_reason(u),
                ContainerError::Svt(s) => svt_reason(s),
            },
            Upload(e) => upload_reason(e),
            Render(e) => render_reason(e),
            Chunk(e) => match e {
                ChunkError::InvalidSplit(_) => ("InvalidSplit", EXIT_USAGE),
                ChunkError::DimMismatch { .. } => ("DimMismatch", EXIT_DATA),
                ChunkError::Svt(s) => svt_reason(s),
                ChunkError::Volume(_) => ("InvalidVolume", EXIT_DATA),
                ChunkError::Render(r) => render_reason(r),
            },
            Capacity(_) => ("CapacityExceeded", EXIT_CAPACITY),
            Io { .. } => ("IoError", EXIT_DATA),
            UnknownFile(_) => ("UnknownFile", EXIT_DATA),
        }
    }

    /// `error: <Reason>: <detail>` on one line.
    pub fn line(&self) -> String {
        let (tag, _) = self.reason();
        let msg = self.to_string();
        let detail = msg.strip_prefix(tag).and_then(|s| s.strip_prefix(": ")).unwrap_or(&msg);
        format!("error: {tag}: {}", detail.replace('\n', " "))
    }
}

fn render_reason(e: &RenderError) -> (&'static str, i32) {
    match e {
        RenderError::Io { .. } => ("IoError", EXIT_DATA),
        RenderError::InvalidTransfer(_) => ("InvalidTransfer", EXIT_USAGE),
        RenderError::InvalidParams(_) => ("InvalidParams", EXIT_USAGE),
    }
}

fn ingest_reason(e: &IngestError) -> &'static str {
    match e {
        IngestError::Io { .. } => "IoError",
        IngestError::SizeMismatch { .. } => "SizeMismatch",
        IngestError::UnsupportedFormatCode(_) => "UnsupportedFormatCode",
        IngestError::TruncatedHeader(_) => "TruncatedHeader",
        IngestError::TruncatedTrace { .. } => "TruncatedTrace",
        IngestError::InconsistentTraceLength { .. } => "InconsistentTraceLength",
        IngestError::InvalidHeader(_) => "InvalidHeader",
        IngestError::DuplicateTrace { .. } => "DuplicateTrace",
        IngestError::DegenerateRange(..) => "DegenerateRange",
        IngestError::BadSidecar(_) => "BadSidecar",
        IngestError::Volume(_) => "InvalidVolume",
    }
}

fn svt_reason(e: &SvtError) -> (&'static str, i32) {
    match e {
        SvtError::AtlasCapacityExceeded { .. } => ("AtlasCapacityExceeded", EXIT_CAPACITY),
        SvtError::Config(_) => ("InvalidConfig", EXIT_USAGE),
        SvtError::Volume(_) => ("InvalidVolume", EXIT_DATA),
        SvtError::OutOfGrid { .. } => ("OutOfGrid", EXIT_DATA),
        SvtError::Invalid(_) => ("InvalidTexture", EXIT_DATA),
    }
}

fn upload_reason(e: &UploadError) -> (&'static str, i32) {
    match e {
        UploadError::CorruptStream(_) => ("CorruptStream", EXIT_DATA),
        UploadError::Uint32OverflowFlagged { .. } => ("Uint32OverflowFlagged", EXIT_CAPACITY),
        UploadError::Io(_) => ("IoError", EXIT_DATA),
    }
}
