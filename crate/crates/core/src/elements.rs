//! Element symbols and organic-subset valence defaults.

const SYMBOLS: [&str; 118] = [
    "H", "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne", "Na", "Mg", "Al", "Si", "P", "S", "Cl",
    "Ar", "K", "Ca", "Sc", "Ti", "V", "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge", "As",
    "Se", "Br", "Kr", "Rb", "Sr", "Y", "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag", "Cd", "In",
    "Sn", "Sb", "Te", "I", "Xe", "Cs", "Ba", "La", "Ce", "Pr", "Nd", "Pm", "Sm", "Eu", "Gd", "Tb",
    "Dy", "Ho", "Er", "Tm", "Yb", "Lu", "Hf", "Ta", "W", "Re", "Os", "Ir", "Pt", "Au", "Hg", "Tl",
    "Pb", "Bi", "Po", "At", "Rn", "Fr", "Ra", "Ac", "Th", "Pa", "U", "Np", "Pu", "Am", "Cm", "Bk",
    "Cf", "Es", "Fm", "Md", "No", "Lr", "Rf", "Db", "Sg", "Bh", "Hs", "Mt", "Ds", "Rg", "Cn", "Nh",
    "Fl", "Mc", "Lv", "Ts", "Og",
];

/// Symbols that may appear outside brackets.
pub const ORGANIC_SUBSET: [&str; 10] = ["B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I"];

/// Elements that may be written in lowercase (aromatic) form.
pub const AROMATIC_CAPABLE: [&str; 8] = ["B", "C", "N", "O", "P", "S", "Se", "As"];

pub const WILDCARD: &str = "*";

pub fn is_element(symbol: &str) -> bool {
    SYMBOLS.contains(&symbol)
}

pub fn atomic_number(symbol: &str) -> Option<u32> {
    SYMBOLS
        .iter()
        .position(|s| *s == symbol)
        .map(|p| p as u32 + 1)
}

pub fn is_organic(symbol: &str) -> bool {
    ORGANIC_SUBSET.contains(&symbol)
}

pub fn can_be_aromatic(symbol: &str) -> bool {
    AROMATIC_CAPABLE.contains(&symbol)
}

/// Default valence used for implicit hydrogens on organic-subset atoms.
pub fn default_valence(symbol: &str) -> Option<u32> {
    match symbol {
        "B" => Some(3),
        "C" => Some(4),
        "N" | "P" => Some(3),
        "O" | "S" => Some(2),
        "F" | "Cl" | "Br" | "I" => Some(1),
        _ => None,
    }
}

/// True for strings usable as a placeholder label (`R1`, `Ph`, `R'`).
///
/// Labels start with a letter and continue with letters, digits, `_` or `'`.
/// A label that is also an element symbol is still a valid label; callers
/// decide which interpretation wins.
pub fn is_label_syntax(text: &str) -> bool {
    let mut chars = text.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'')
}
