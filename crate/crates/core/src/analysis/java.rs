//! Token-level heuristic analyzer for Java-like sources.
//!
//! Not a parser. Comments and literals are blanked first, then a brace stack
//! tells type bodies, executable units and nested blocks apart.

use std::collections::BTreeSet;

use super::ComplexityMetrics;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum LineKind {
    Blank,
    Code,
    Comment,
}

/// Source with comments and literal contents replaced by spaces, plus a
/// per-line classification.
struct Stripped {
    code: Vec<char>,
    lines: Vec<LineKind>,
}

fn strip(source: &str) -> Stripped {
    #[derive(PartialEq)]
    enum St {
        Code,
        Line,
        Block,
        Str,
        Text,
        Char,
    }
    let chars: Vec<char> = source.chars().collect();
    let mut code = Vec::with_capacity(chars.len());
    let mut lines = Vec::new();
    let mut state = St::Code;
    // classification of the current line: decided by the first non-blank char
    let mut current: Option<LineKind> = None;
    let mut i = 0;
    let mark = |current: &mut Option<LineKind>, kind: LineKind| {
        if current.is_none() {
            *current = Some(kind);
        }
    };
    while i < chars.len() {
        let c = chars[i];
        let next = chars.get(i + 1).copied();
        if c == '\n' {
            lines.push(current.take().unwrap_or(LineKind::Blank));
            code.push('\n');
            if state == St::Line {
                state = St::Code;
            }
            i += 1;
            continue;
        }
        match state {
            St::Code => {
                if c == '/' && next == Some('/') {
                    mark(&mut current, LineKind::Comment);
                    state = St::Line;
                    code.extend([' ', ' ']);
                    i += 2;
                    continue;
                }
                if c == '/' && next == Some('*') {
                    mark(&mut current, LineKind::Comment);
                    state = St::Block;
                    code.extend([' ', ' ']);
                    i += 2;
                    continue;
                }
                if !c.is_whitespace() {
                    mark(&mut current, LineKind::Code);
                }
                if c == '"' && next == Some('"') && chars.get(i + 2) == Some(&'"') {
                    state = St::Text;
                    code.extend(['"', ' ', ' ']);
                    i += 3;
                    continue;
                }
                if c == '"' {
                    state = St::Str;
                } else if c == '\'' {
                    state = St::Char;
                }
                code.push(c);
            }
            St::Line => code.push(' '),
            St::Block => {
                if !c.is_whitespace() {
                    mark(&mut current, LineKind::Comment);
                }
                if c == '*' && next == Some('/') {
                    state = St::Code;
                    code.extend([' ', ' ']);
                    i += 2;
                    continue;
                }
                code.push(' ');
            }
            St::Str | St::Char => {
                if !c.is_whitespace() {
                    mark(&mut current, LineKind::Code);
                }
                let quote = if state == St::Str { '"' } else { '\'' };
                if c == '\\' {
                    code.push(' ');
                    if next.is_some() && next != Some('\n') {
                        code.push(' ');
                        i += 2;
                        continue;
                    }
                } else if c == quote {
                    state = St::Code;
                    code.push(c);
                } else {
                    code.push(' ');
                }
            }
            St::Text => {
                if !c.is_whitespace() {
                    mark(&mut current, LineKind::Code);
                }
                if c == '"' && next == Some('"') && chars.get(i + 2) == Some(&'"') {
                    state = St::Code;
                    code.extend([' ', ' ', '"']);
                    i += 3;
                    continue;
                }
                if c == '\\' && next.is_some() && next != Some('\n') {
                    code.extend([' ', ' ']);
                    i += 2;
                    continue;
                }
                code.push(' ');
            }
        }
        i += 1;
    }
    if !chars.is_empty() && chars.last() != Some(&'\n') {
        lines.push(current.take().unwrap_or(LineKind::Blank));
    }
    Stripped { code, lines }
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Token {
    text: String,
    line: u32,
}

fn tokenize(code: &[char]) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut line = 1u32;
    let mut i = 0;
    while i < code.len() {
        let c = code[i];
        if c == '\n' {
            line += 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_alphanumeric() || c == '_' || c == '$' {
            let start = i;
            while i < code.len() && (code[i].is_alphanumeric() || code[i] == '_' || code[i] == '$') {
                i += 1;
            }
            tokens.push(Token {
                text: code[start..i].iter().collect(),
                line,
            });
            continue;
        }
        let two: String = code[i..(i + 2).min(code.len())].iter().collect();
        if matches!(two.as_str(), "&&" | "||" | "->" | "::" | "==" | "!=" | "<=" | ">=") {
            tokens.push(Token { text: two, line });
            i += 2;
            continue;
        }
        tokens.push(Token {
            text: c.to_string(),
            line,
        });
        i += 1;
    }
    tokens
}

const TYPE_KEYWORDS: [&str; 4] = ["class", "interface", "enum", "record"];
const CONTROL_KEYWORDS: [&str; 9] = [
    "if",
    "else",
    "for",
    "while",
    "do",
    "switch",
    "try",
    "catch",
    "finally",
];
const NON_TYPE_WORDS: [&str; 16] = [
    "return", "new", "throw", "break", "continue", "case", "default", "else", "assert", "yield",
    "this", "super", "true", "false", "null", "instanceof",
];
const PRIMITIVES: [&str; 9] = [
    "int", "long", "short", "byte", "char", "boolean", "float", "double", "var",
];

fn is_ident(s: &str) -> bool {
    s.chars()
        .next()
        .is_some_and(|c| c.is_alphabetic() || c == '_' || c == '$')
}

/// Risk-relevant description of one executable unit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnitInfo {
    pub name: String,
    pub start_line: u32,
    pub end_line: u32,
    pub nloc: u32,
    pub cyclomatic: u32,
    pub parameters: u32,
}

/// Everything the analyzer extracts from one file before cross-file
/// resolution.
#[derive(Clone, Debug, PartialEq)]
pub struct ParsedFile {
    pub metrics: ComplexityMetrics,
    pub units: Vec<UnitInfo>,
    /// Imported names as written, e.g. `java.util.List` or `p.q.*`.
    pub imports: Vec<String>,
    /// Capitalized identifiers referenced outside import statements.
    pub referenced_types: BTreeSet<String>,
    pub declared_types: BTreeSet<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum BlockKind {
    Loop,
    Switch,
    OtherControl,
    Plain,
}

#[derive(Clone, Debug)]
enum Ctx {
    File,
    Type { is_enum: bool, constants_done: bool },
    Unit { unit: usize },
    Block { kind: BlockKind, control: bool },
    /// Brace-enclosed initializer such as `int[] a = {1, 2};`.
    Initializer,
}

#[derive(Default, Clone)]
struct UnitCounts {
    name: String,
    is_function: bool,
    start_line: u32,
    end_line: u32,
    parameters: u32,
    decisions: u32,
    cases: u32,
    switches: u32,
    logical: u32,
    jumps: u32,
    final_return: bool,
    max_nesting: u32,
}

struct Parser<'a> {
    toks: &'a [Token],
    stack: Vec<Ctx>,
    units: Vec<UnitCounts>,
    /// start index of the tokens of the statement/header being read
    header_start: usize,
    m: ComplexityMetrics,
    decl_lines: BTreeSet<u32>,
    exe_lines: BTreeSet<u32>,
    imports: Vec<String>,
    referenced: BTreeSet<String>,
    declared: BTreeSet<String>,
    paren: i32,
}

fn top_level_commas(tokens: &[Token]) -> u32 {
    let (mut depth, mut commas) = (0i32, 0u32);
    for t in tokens {
        match t.text.as_str() {
            "(" | "<" | "[" | "{" => depth += 1,
            ")" | ">" | "]" | "}" => depth -= 1,
            "," if depth == 0 => commas += 1,
            "=" if depth == 0 => depth += 100,
            _ => {}
        }
    }
    commas
}

/// Drops `@Name` and `@Name(...)` annotations from a declaration header.
fn strip_annotations(header: &[Token]) -> Vec<Token> {
    let mut out = Vec::with_capacity(header.len());
    let mut i = 0;
    while i < header.len() {
        if header[i].text == "@" && header.get(i + 1).is_some_and(|t| t.text != "interface") {
            i += 2;
            while header.get(i).is_some_and(|t| t.text == ".") {
                i += 2;
            }
            if header.get(i).is_some_and(|t| t.text == "(") {
                let mut depth = 0;
                while i < header.len() {
                    match header[i].text.as_str() {
                        "(" => depth += 1,
                        ")" => {
                            depth -= 1;
                            if depth == 0 {
                                i += 1;
                                break;
                            }
                        }
                        _ => {}
                    }
                    i += 1;
                }
            }
            continue;
        }
        out.push(header[i].clone());
        i += 1;
    }
    out
}

/// Position of a `class`/`interface`/`enum`/`record` keyword that starts a
/// type declaration (not `Foo.class`).
fn type_keyword(header: &[Token]) -> Option<usize> {
    (0..header.len()).find(|&i| {
        TYPE_KEYWORDS.contains(&header[i].text.as_str())
            && (i == 0 || header[i - 1].text != ".")
            && header.get(i + 1).is_some_and(|t| is_ident(&t.text))
    })
}

fn modifiers(header: &[Token]) -> (bool, Option<&'static str>) {
    let mut is_static = false;
    let mut access = None;
    for t in header {
        match t.text.as_str() {
            "static" => is_static = true,
            "public" => access = Some("public"),
            "private" => access = Some("private"),
            "protected" => access = Some("protected"),
            _ => {}
        }
    }
    (is_static, access)
}

/// Finds `name ( params )` ending the header (optionally followed by a
/// `throws` clause). Returns (name, parameter count).
fn method_signature(header: &[Token]) -> Option<(String, u32)> {
    let mut end = header.len();
    if let Some(p) = header.iter().position(|t| t.text == "throws") {
        end = p;
    }
    let h = &header[..end];
    if h.last()?.text != ")" {
        return None;
    }
    let mut depth = 0;
    let mut open = None;
    for i in (0..h.len()).rev() {
        match h[i].text.as_str() {
            ")" => depth += 1,
            "(" => {
                depth -= 1;
                if depth == 0 {
                    open = Some(i);
                    break;
                }
            }
            _ => {}
        }
    }
    let open = open?;
    if open == 0 {
        return None;
    }
    let name = &h[open - 1].text;
    if !is_ident(name)
        || CONTROL_KEYWORDS.contains(&name.as_str())
        || NON_TYPE_WORDS.contains(&name.as_str())
        || name == "synchronized"
    {
        return None;
    }
    // `new Foo(...)` is an anonymous class, not a method
    if open >= 2 && h[..open - 1].iter().any(|t| t.text == "new") {
        return None;
    }
    if h[..open - 1].iter().any(|t| t.text == "=") {
        return None;
    }
    let inner = &h[open + 1..h.len() - 1];
    let params = if inner.is_empty() {
        0
    } else {
        top_level_commas(inner) + 1
    };
    Some((name.clone(), params))
}

fn is_local_declaration(stmt: &[Token]) -> bool {
    let mut i = 0;
    while i < stmt.len() && (stmt[i].text == "final" || stmt[i].text == "@") {
        if stmt[i].text == "@" {
            i += 2;
        } else {
            i += 1;
        }
    }
    let Some(first) = stmt.get(i) else {
        return false;
    };
    if !is_ident(&first.text)
        || NON_TYPE_WORDS.contains(&first.text.as_str())
        || CONTROL_KEYWORDS.contains(&first.text.as_str())
    {
        return false;
    }
    i += 1;
    // qualified names, generics and array brackets
    loop {
        match stmt.get(i).map(|t| t.text.as_str()) {
            Some(".") => i += 2,
            Some("<") => {
                let mut depth = 0;
                while i < stmt.len() {
                    match stmt[i].text.as_str() {
                        "<" => depth += 1,
                        ">" => {
                            depth -= 1;
                            if depth == 0 {
                                i += 1;
                                break;
                            }
                        }
                        ";" | "(" => return false,
                        _ => {}
                    }
                    i += 1;
                }
            }
            Some("[") if stmt.get(i + 1).map(|t| t.text.as_str()) == Some("]") => i += 2,
            _ => break,
        }
    }
    let Some(name) = stmt.get(i) else {
        return false;
    };
    if !is_ident(&name.text) || NON_TYPE_WORDS.contains(&name.text.as_str()) {
        return false;
    }
    matches!(
        stmt.get(i + 1).map(|t| t.text.as_str()),
        Some("=") | Some(";") | Some(",") | Some(":") | None
    ) || PRIMITIVES.contains(&first.text.as_str())
}

impl<'a> Parser<'a> {
    fn current_unit(&self) -> Option<usize> {
        self.stack.iter().rev().find_map(|c| match c {
            Ctx::Unit { unit } => Some(*unit),
            Ctx::Type { .. } => Some(usize::MAX),
            _ => None,
        })
        .filter(|&u| u != usize::MAX)
    }

    fn control_depth(&self) -> u32 {
        let mut d = 0;
        for c in self.stack.iter().rev() {
            match c {
                Ctx::Block { control: true, .. } => d += 1,
                Ctx::Unit { .. } | Ctx::Type { .. } => break,
                _ => {}
            }
        }
        d
    }

    fn in_code_body(&self) -> bool {
        matches!(
            self.stack.last(),
            Some(Ctx::Unit { .. }) | Some(Ctx::Block { .. })
        )
    }

    fn header(&self, end: usize) -> &'a [Token] {
        &self.toks[self.header_start.min(end)..end]
    }

    fn run(&mut self) {
        let toks = self.toks;
        let mut i = 0;
        while i < toks.len() {
            let t = &toks[i];
            let text = t.text.as_str();
            // imports and package statements
            if self.stack.len() == 1 && i == self.header_start && (text == "import" || text == "package") {
                let mut j = i + 1;
                let mut name = String::new();
                while j < toks.len() && toks[j].text != ";" {
                    if toks[j].text != "static" {
                        name.push_str(&toks[j].text);
                    }
                    j += 1;
                }
                if text == "import" {
                    self.imports.push(name);
                }
                self.m.count_stmt_decl += 1;
                self.decl_lines.insert(t.line);
                i = j + 1;
                self.header_start = i;
                continue;
            }
            match text {
                "(" => self.paren += 1,
                ")" => self.paren -= 1,
                _ => {}
            }
            if is_ident(text) && text.chars().next().is_some_and(char::is_uppercase) {
                let qualified = i > 0 && toks[i - 1].text == ".";
                if !qualified {
                    self.referenced.insert(text.to_string());
                }
            }
            if let Some(u) = self.current_unit() {
                let unit = &mut self.units[u];
                match text {
                    "if" | "for" | "while" | "catch" => unit.decisions += 1,
                    "case" => unit.cases += 1,
                    "switch" => unit.switches += 1,
                    "&&" | "||" => unit.logical += 1,
                    "?" => {
                        let prev = if i > 0 { toks[i - 1].text.as_str() } else { "" };
                        if prev != "<" && prev != "," {
                            unit.logical += 1;
                        }
                    }
                    "return" | "continue" => unit.jumps += 1,
                    "break" => {
                        let in_switch = self.stack.iter().rev().find_map(|c| match c {
                            Ctx::Block { kind: BlockKind::Switch, .. } => Some(true),
                            Ctx::Block { kind: BlockKind::Loop, .. } => Some(false),
                            Ctx::Unit { .. } => Some(false),
                            _ => None,
                        });
                        if in_switch != Some(true) {
                            self.units[u].jumps += 1;
                        }
                    }
                    _ => {}
                }
            }
            match text {
                "{" => self.open_brace(i),
                "}" => self.close_brace(i),
                ";" if self.paren <= 0 => self.end_statement(i),
                _ => {}
            }
            i += 1;
        }
    }

    fn open_brace(&mut self, i: usize) {
        let line = self.toks[i].line;
        let top = self.stack.last().cloned().unwrap_or(Ctx::File);
        if matches!(top, Ctx::Initializer) {
            self.stack.push(Ctx::Initializer);
            return;
        }
        let stripped = strip_annotations(self.header(i));
        let header = stripped.as_slice();
        let ctx = match top {
            Ctx::File | Ctx::Type { .. } => {
                let in_enum_constants = matches!(top, Ctx::Type { is_enum: true, constants_done: false });
                if let Some(pos) = type_keyword(header) {
                    if let Some(name) = header.get(pos + 1) {
                        self.declared.insert(name.text.clone());
                    }
                    self.m.count_decl_class += 1;
                    self.m.count_stmt_decl += 1;
                    self.decl_lines.insert(header.first().map_or(line, |t| t.line));
                    if in_enum_constants {
                        self.mark_constants_done();
                    }
                    Ctx::Type {
                        is_enum: header[pos].text == "enum",
                        constants_done: false,
                    }
                } else if in_enum_constants {
                    // constant with a body
                    Ctx::Type {
                        is_enum: false,
                        constants_done: true,
                    }
                } else if let Some((name, params)) = method_signature(header) {
                    let (is_static, access) = modifiers(header);
                    self.count_method(is_static, access);
                    self.m.count_decl_function += 1;
                    self.m.count_decl_executable_unit += 1;
                    self.decl_lines.insert(header.first().map_or(line, |t| t.line));
                    self.units.push(UnitCounts {
                        name,
                        is_function: true,
                        start_line: header.first().map_or(line, |t| t.line),
                        parameters: params,
                        ..Default::default()
                    });
                    Ctx::Unit {
                        unit: self.units.len() - 1,
                    }
                } else if header.iter().any(|t| t.text == "=") {
                    Ctx::Initializer
                } else if header.iter().all(|t| t.text == "static") {
                    self.m.count_decl_executable_unit += 1;
                    self.units.push(UnitCounts {
                        name: "<init>".into(),
                        start_line: line,
                        ..Default::default()
                    });
                    Ctx::Unit {
                        unit: self.units.len() - 1,
                    }
                } else {
                    Ctx::Block {
                        kind: BlockKind::Plain,
                        control: false,
                    }
                }
            }
            Ctx::Unit { .. } | Ctx::Block { .. } => {
                let is_new = header.iter().any(|t| t.text == "new")
                    && header.last().is_some_and(|t| t.text == ")");
                let first = header.first().map(|t| t.text.as_str()).unwrap_or("");
                let lead = header
                    .iter()
                    .rev()
                    .find(|t| CONTROL_KEYWORDS.contains(&t.text.as_str()) || t.text == "synchronized")
                    .map(|t| t.text.as_str());
                if is_new && !CONTROL_KEYWORDS.contains(&first) {
                    self.m.count_decl_class += 1;
                    Ctx::Type {
                        is_enum: false,
                        constants_done: true,
                    }
                } else if header.last().is_some_and(|t| t.text == "->") {
                    Ctx::Block {
                        kind: BlockKind::Plain,
                        control: false,
                    }
                } else if CONTROL_KEYWORDS.contains(&first) || first == "synchronized" {
                    let kind = match lead.unwrap_or(first) {
                        "for" | "while" | "do" => BlockKind::Loop,
                        "switch" => BlockKind::Switch,
                        _ => BlockKind::OtherControl,
                    };
                    if first != "else" || header.len() > 1 {
                        self.count_exe(header[0].line);
                    }
                    Ctx::Block {
                        kind,
                        control: true,
                    }
                } else if header.iter().any(|t| t.text == "=" || t.text == "return") {
                    Ctx::Initializer
                } else {
                    Ctx::Block {
                        kind: BlockKind::Plain,
                        control: false,
                    }
                }
            }
            Ctx::Initializer => unreachable!(),
        };
        let keeps_statement = matches!(ctx, Ctx::Initializer);
        self.stack.push(ctx);
        if keeps_statement {
            return;
        }
        let depth = self.control_depth();
        if let Some(u) = self.current_unit() {
            let unit = &mut self.units[u];
            unit.max_nesting = unit.max_nesting.max(depth);
        }
        self.paren = 0;
        self.header_start = i + 1;
    }

    fn mark_constants_done(&mut self) {
        if let Some(Ctx::Type { constants_done, .. }) = self.stack.last_mut() {
            *constants_done = true;
        }
    }

    fn close_brace(&mut self, i: usize) {
        let line = self.toks[i].line;
        // statement without `;` before `}` (e.g. last enum constant)
        let pending = self.header(i);
        if !pending.is_empty() && self.in_code_body() {
            self.end_statement(i);
        }
        let popped = self.stack.pop();
        if self.stack.is_empty() {
            self.stack.push(Ctx::File);
        }
        match popped {
            Some(Ctx::Unit { unit }) => {
                let u = &mut self.units[unit];
                u.end_line = line;
            }
            Some(Ctx::Initializer) => {
                // the initializer belongs to the enclosing statement
                return;
            }
            _ => {}
        }
        self.paren = 0;
        self.header_start = i + 1;
    }

    fn count_method(&mut self, is_static: bool, access: Option<&str>) {
        self.m.count_decl_method += 1;
        self.m.count_stmt_decl += 1;
        if is_static {
            self.m.count_decl_class_method += 1;
        } else {
            self.m.count_decl_instance_method += 1;
        }
        match access {
            Some("public") => self.m.count_decl_method_public += 1,
            Some("private") => self.m.count_decl_method_private += 1,
            Some("protected") => self.m.count_decl_method_protected += 1,
            _ => self.m.count_decl_method_default += 1,
        }
    }

    fn count_exe(&mut self, line: u32) {
        self.m.count_stmt_exe += 1;
        self.exe_lines.insert(line);
    }

    fn end_statement(&mut self, i: usize) {
        if matches!(self.stack.last(), Some(Ctx::Initializer)) {
            return;
        }
        let stripped = strip_annotations(self.header(i));
        let stmt = stripped.as_slice();
        self.header_start = i + 1;
        self.paren = 0;
        if stmt.is_empty() {
            return;
        }
        let line = stmt[0].line;
        match self.stack.last().cloned().unwrap_or(Ctx::File) {
            Ctx::Type {
                is_enum,
                constants_done,
            } => {
                if is_enum && !constants_done {
                    self.mark_constants_done();
                    return;
                }
                if type_keyword(stmt).is_some() {
                    return;
                }
                if let Some((_, _)) = method_signature(stmt) {
                    let (is_static, access) = modifiers(stmt);
                    self.count_method(is_static, access);
                    self.decl_lines.insert(line);
                } else {
                    let (is_static, _) = modifiers(stmt);
                    let n = top_level_commas(stmt) + 1;
                    if is_static {
                        self.m.count_decl_class_variable += n;
                    } else {
                        self.m.count_decl_instance_variable += n;
                    }
                    self.m.count_stmt_decl += 1;
                    self.decl_lines.insert(line);
                }
            }
            Ctx::Unit { unit } => {
                self.statement_in_body(stmt, line, Some(unit));
            }
            Ctx::Block { .. } => {
                self.statement_in_body(stmt, line, None);
            }
            Ctx::File | Ctx::Initializer => {}
        }
    }

    fn statement_in_body(&mut self, stmt: &[Token], line: u32, top_unit: Option<usize>) {
        // leading control keywords of brace-less bodies: `if (x) return;`
        let mut s = stmt;
        while let Some(first) = s.first() {
            let kw = first.text.as_str();
            if kw == "else" || kw == "do" {
                s = &s[1..];
                continue;
            }
            if matches!(kw, "if" | "for" | "while" | "switch" | "catch" | "synchronized") {
                self.count_exe(first.line);
                // skip the parenthesized condition
                let mut depth = 0;
                let mut j = 1;
                while j < s.len() {
                    match s[j].text.as_str() {
                        "(" => depth += 1,
                        ")" => {
                            depth -= 1;
                            if depth == 0 {
                                j += 1;
                                break;
                            }
                        }
                        _ => {}
                    }
                    j += 1;
                }
                s = &s[j.min(s.len())..];
                continue;
            }
            break;
        }
        let Some(first) = s.first() else { return };
        if is_local_declaration(s) {
            self.m.count_stmt_decl += 1;
            self.decl_lines.insert(first.line);
        } else {
            self.count_exe(first.line.max(line));
        }
        if let Some(u) = self.current_unit() {
            self.units[u].final_return = top_unit == Some(u) && first.text == "return";
        }
    }
}

/// Analyzes one Java-like source text.
pub fn parse_java(source: &str) -> ParsedFile {
    let stripped = strip(source);
    let toks = tokenize(&stripped.code);
    let mut parser = Parser {
        toks: &toks,
        stack: vec![Ctx::File],
        units: Vec::new(),
        header_start: 0,
        m: ComplexityMetrics::default(),
        decl_lines: BTreeSet::new(),
        exe_lines: BTreeSet::new(),
        imports: Vec::new(),
        referenced: BTreeSet::new(),
        declared: BTreeSet::new(),
        paren: 0,
    };
    parser.run();
    let mut m = parser.m;
    for kind in &stripped.lines {
        match kind {
            LineKind::Blank => m.count_line_blank += 1,
            LineKind::Code => m.count_line_code += 1,
            LineKind::Comment => m.count_line_comment += 1,
        }
    }
    m.count_line = stripped.lines.len() as u32;
    m.count_line_code_decl = parser.decl_lines.len() as u32;
    m.count_line_code_exe = parser.exe_lines.len() as u32;
    m.count_stmt = m.count_stmt_decl + m.count_stmt_exe;
    m.ratio_comment_to_code = if m.count_line_code > 0 {
        m.count_line_comment as f64 / m.count_line_code as f64
    } else {
        0.0
    };
    let code_line = |l: u32| stripped.lines.get(l as usize - 1) == Some(&LineKind::Code);
    let mut units = Vec::new();
    for u in &parser.units {
        let end = u.end_line.max(u.start_line);
        let cyclomatic = 1 + u.decisions + u.cases;
        if u.is_function {
            let modified = 1 + u.decisions + u.switches;
            let strict = cyclomatic + u.logical;
            let essential = 1 + u.jumps.saturating_sub(u32::from(u.final_return));
            m.sum_cyclomatic += cyclomatic;
            m.sum_cyclomatic_modified += modified;
            m.sum_cyclomatic_strict += strict;
            m.sum_essential += essential;
            m.max_cyclomatic = m.max_cyclomatic.max(cyclomatic);
            m.max_cyclomatic_modified = m.max_cyclomatic_modified.max(modified);
            m.max_cyclomatic_strict = m.max_cyclomatic_strict.max(strict);
            m.max_essential = m.max_essential.max(essential);
        }
        m.max_nesting = m.max_nesting.max(u.max_nesting);
        units.push(UnitInfo {
            name: u.name.clone(),
            start_line: u.start_line,
            end_line: end,
            nloc: (u.start_line..=end).filter(|&l| l >= 1 && code_line(l)).count() as u32,
            cyclomatic,
            parameters: u.parameters,
        });
    }
    let declared = parser.declared;
    let referenced = parser
        .referenced
        .into_iter()
        .filter(|r| !declared.contains(r))
        .collect();
    ParsedFile {
        metrics: m,
        units,
        imports: parser.imports,
        referenced_types: referenced,
        declared_types: declared,
    }
}
