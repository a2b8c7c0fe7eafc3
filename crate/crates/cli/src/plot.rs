//! gnuplot scripts for the CSV outputs. Run from the output directory:
//! `gnuplot -p tension.plot`.

fn quoted(title: &str) -> String {
    title.replace('\\', "\\\\").replace('"', "\\\"")
}

const MEASURES: [(usize, &str); 3] = [(3, "cloud diameter"), (4, "cloud momentum"), (5, "tensile strain")];

/// Three stacked line charts, one per measure, against onset in beats.
pub fn tension_script(title: &str, csv: &str) -> String {
    let mut s = format!(
        "set datafile separator ','\nset key off\nset grid\nset multiplot layout 3,1 title \"{}\"\n",
        quoted(title)
    );
    for (col, name) in MEASURES {
        s += &format!("set ylabel '{name}'\nplot '{csv}' using 2:{col} every ::1 with lines lw 2\n");
    }
    s += "set xlabel 'beats'\nunset multiplot\n";
    s
}

/// Target, before and after profiles per measure, plus the objective trace.
pub fn morph_script(title: &str) -> String {
    let mut s = format!(
        "set datafile separator ','\nset grid\nset multiplot layout 4,1 title \"{}\"\n",
        quoted(title)
    );
    for (col, name) in MEASURES {
        s += &format!(
            "set ylabel '{name}'\nplot 'tension_target.csv' using 2:{col} every ::1 with lines lw 2 title 'target', \\\n     \
             'tension_before.csv' using 2:{col} every ::1 with lines dt 2 title 'template', \\\n     \
             'tension_after.csv' using 2:{col} every ::1 with lines title 'output'\n"
        );
    }
    s += "set ylabel 'objective'\nset xlabel 'move'\nset logscale y\n\
          plot 'trace.csv' using 1:3 every ::2 with lines title 'current', \\\n     \
          'trace.csv' using 1:4 every ::2 with lines title 'best'\nunset multiplot\n";
    s
}
