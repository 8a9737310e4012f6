use std::io::Write;
use std::process::ExitCode;

fn main() -> ExitCode {
    let (report, format) = frobforge_cli::run(std::env::args_os());
    let out = report.render(format);
    if report.exit == frobforge_cli::Exit::Success || report.exit == frobforge_cli::Exit::Condition {
        print!("{out}");
    } else {
        eprint!("{out}");
        if format == frobforge_cli::Format::Json {
            print!("{out}");
        }
    }
    let _ = std::io::stdout().flush();
    ExitCode::from(report.exit.code() as u8)
}
