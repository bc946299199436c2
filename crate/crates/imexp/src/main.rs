use clap::error::ErrorKind;
use clap::Parser;

fn main() {
    // Usage mistakes share the generic error exit code; 2 is reserved for
    // runs that complete but cannot certify their bounds.
    let cli = match imexp::cli::Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            e.exit()
        }
        Err(e) => {
            let _ = e.print();
            std::process::exit(imexp::cli::EXIT_ERROR);
        }
    };
    std::process::exit(imexp::cli::run(cli));
}
