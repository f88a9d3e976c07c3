use std::io::{BufRead, IsTerminal, Write};

use logiplan::logic::{solve, KnowledgeBase, Provenance, Query, Term};

use crate::transcript::BUDGET;
use crate::CliError;

/// Reads goals from stdin until end of input or `halt.`. After each
/// answer that may have alternatives, a line holding `;` asks for the next
/// one and anything else stops.
pub fn run(kb: &mut KnowledgeBase) -> Result<(), CliError> {
    let stdin = std::io::stdin();
    let tty = stdin.is_terminal();
    let mut input = stdin.lock();
    let mut out = std::io::stdout().lock();
    let mut pending = String::new();
    loop {
        if tty {
            let _ = write!(out, "{}", if pending.is_empty() { "?- " } else { "|    " });
            let _ = out.flush();
        }
        let mut line = String::new();
        if input.read_line(&mut line).map_err(CliError::internal)? == 0 {
            return Ok(());
        }
        if pending.is_empty() && line.trim().is_empty() {
            continue;
        }
        pending.push_str(&line);
        if !pending.trim_end().ends_with('.') {
            continue;
        }
        let text = std::mem::take(&mut pending);
        let query = match Query::parse(&text, kb) {
            Ok(q) => q,
            Err(e) => {
                writeln!(out, "ERROR: {e}").map_err(CliError::internal)?;
                continue;
            }
        };
        match directive(&query.goal) {
            Some(Directive::Halt) => return Ok(()),
            Some(Directive::Consult(files)) => {
                for f in files {
                    match std::fs::read_to_string(&f)
                        .map_err(|e| e.to_string())
                        .and_then(|src| kb.consult(&src, Provenance::Program).map_err(|e| e.to_string()))
                    {
                        Ok(n) => writeln!(out, "% {f}: {n} clauses"),
                        Err(e) => writeln!(out, "ERROR: {f}: {e}"),
                    }
                    .map_err(CliError::internal)?;
                }
                writeln!(out, "true.").map_err(CliError::internal)?;
                continue;
            }
            None => {}
        }
        answer(kb, query, &mut input, &mut out, tty)?;
    }
}

enum Directive {
    Halt,
    Consult(Vec<String>),
}

fn directive(goal: &Term) -> Option<Directive> {
    if goal.is_atom("halt") {
        return Some(Directive::Halt);
    }
    let files = match goal {
        Term::Compound(c) if &*c.functor == "consult" && c.args.len() == 1 => vec![c.args[0].clone()],
        _ => goal.list_items()?,
    };
    let names: Option<Vec<String>> = files.iter().map(|f| f.as_atom().map(str::to_string)).collect();
    names.filter(|n| !n.is_empty()).map(Directive::Consult)
}

fn answer(kb: &KnowledgeBase, query: Query, input: &mut impl BufRead, out: &mut impl Write, tty: bool) -> Result<(), CliError> {
    let io = CliError::internal;
    let mut sols = solve(kb, query, BUDGET);
    let mut next = sols.next();
    loop {
        let printed = sols.take_output();
        out.write_all(printed.as_bytes()).map_err(io)?;
        let current = match next {
            None => {
                writeln!(out, "false.").map_err(io)?;
                return Ok(());
            }
            Some(Err(e)) => {
                writeln!(out, "ERROR: {e}").map_err(io)?;
                return Ok(());
            }
            Some(Ok(a)) => a,
        };
        // Look one answer ahead so that the last one closes with a period.
        next = sols.next();
        if next.is_none() {
            out.write_all(sols.take_output().as_bytes()).map_err(io)?;
            writeln!(out, "{}.", current.render()).map_err(io)?;
            return Ok(());
        }
        write!(out, "{}{}", current.render(), if tty { " " } else { "" }).map_err(io)?;
        out.flush().map_err(io)?;
        let mut reply = String::new();
        input.read_line(&mut reply).map_err(io)?;
        let more = reply.trim() == ";";
        if !tty {
            writeln!(out, "{}", if more { " ;" } else { "." }).map_err(io)?;
        } else if reply.trim().is_empty() {
            writeln!(out, ".").map_err(io)?;
        }
        if !more {
            return Ok(());
        }
    }
}
