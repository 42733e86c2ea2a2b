#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "smtl/simulate.hpp"
#include "smtl/types.hpp"

namespace smtl {

namespace csv {

inline std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

inline double parse_number(const std::string& cell, const std::string& file,
                           int line_no) {
    char* end = nullptr;
    const double v = std::strtod(cell.c_str(), &end);
    require(end && *end == '\0' && end != cell.c_str(), ErrorKind::schema,
            file + ":" + std::to_string(line_no) + ": non-numeric cell '" +
                cell + "'");
    return v;
}

}  // namespace csv

struct LoadedProblem {
    MTLProblem problem;
    std::vector<std::string> feature_names;
};

/// One task per file: header row with `y` first and the shared feature
/// columns after it. Every task must carry the identical header.
inline TaskDataset read_task_csv(const std::filesystem::path& path,
                                 std::vector<std::string>* feature_names) {
    std::ifstream in(path);
    require(in.good(), ErrorKind::io, "cannot open '" + path.string() + "'");
    const std::string fname = path.string();
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), ErrorKind::schema,
            fname + ": empty file");
    const auto header = csv::split_line(line);
    require(header.size() >= 2, ErrorKind::schema,
            fname + ":1: need a y column plus at least one feature");
    require(header[0] == "y", ErrorKind::schema,
            fname + ":1: first column must be named 'y', got '" + header[0] + "'");
    if (feature_names) {
        if (feature_names->empty())
            feature_names->assign(header.begin() + 1, header.end());
        else
            require(std::equal(feature_names->begin(), feature_names->end(),
                               header.begin() + 1, header.end()),
                    ErrorKind::schema,
                    fname + ":1: feature header differs from the other tasks");
    }
    const size_t p = header.size() - 1;
    std::vector<double> ys;
    std::vector<double> xs;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto cells = csv::split_line(line);
        require(cells.size() == header.size(), ErrorKind::schema,
                fname + ":" + std::to_string(line_no) + ": expected " +
                    std::to_string(header.size()) + " cells, got " +
                    std::to_string(cells.size()));
        ys.push_back(csv::parse_number(cells[0], fname, line_no));
        for (size_t j = 1; j < cells.size(); ++j)
            xs.push_back(csv::parse_number(cells[j], fname, line_no));
    }
    require(!ys.empty(), ErrorKind::schema, fname + ": no data rows");

    TaskDataset t;
    t.id = path.stem().string();
    const Eigen::Index n = Eigen::Index(ys.size());
    t.y = Eigen::Map<VectorXd>(ys.data(), n);
    t.X.resize(n, Eigen::Index(p));
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < Eigen::Index(p); ++j)
            t.X(i, j) = xs[size_t(i) * p + size_t(j)];
    validate_task(t);
    return t;
}

/// Loads every *.csv in the directory as one task, in filename order.
inline LoadedProblem load_problem_dir(const std::filesystem::path& dir) {
    require(std::filesystem::is_directory(dir), ErrorKind::io,
            "'" + dir.string() + "' is not a directory");
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".csv")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    require(!files.empty(), ErrorKind::io,
            "no .csv task files in '" + dir.string() + "'");
    LoadedProblem out;
    for (const auto& f : files)
        out.problem.tasks.push_back(read_task_csv(f, &out.feature_names));
    validate_problem(out.problem);
    return out;
}

inline void write_task_csv(const std::filesystem::path& path,
                           const TaskDataset& task,
                           const std::vector<std::string>& feature_names) {
    std::ofstream os(path);
    require(os.good(), ErrorKind::io, "cannot write '" + path.string() + "'");
    os << "y";
    for (const auto& f : feature_names) os << "," << f;
    os << "\n";
    for (Eigen::Index i = 0; i < task.n(); ++i) {
        os << csv::num(task.y[i]);
        for (Eigen::Index j = 0; j < task.p(); ++j)
            os << "," << csv::num(task.X(i, j));
        os << "\n";
    }
}

inline std::vector<std::string> default_feature_names(Eigen::Index p) {
    std::vector<std::string> names;
    names.reserve(p);
    for (Eigen::Index j = 0; j < p; ++j)
        names.push_back("f" + std::to_string(j + 1));
    return names;
}

/// p x K coefficient-style table: feature name column then one column per task.
inline void write_coef_csv(const std::filesystem::path& path, const MatrixXd& M,
                           const std::vector<std::string>& feature_names,
                           const std::vector<std::string>& task_ids) {
    std::ofstream os(path);
    require(os.good(), ErrorKind::io, "cannot write '" + path.string() + "'");
    os << "feature";
    for (const auto& id : task_ids) os << "," << id;
    os << "\n";
    for (Eigen::Index j = 0; j < M.rows(); ++j) {
        os << feature_names[size_t(j)];
        for (Eigen::Index k = 0; k < M.cols(); ++k) os << "," << csv::num(M(j, k));
        os << "\n";
    }
}

inline MatrixXd read_coef_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(in.good(), ErrorKind::io, "cannot open '" + path.string() + "'");
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), ErrorKind::schema,
            path.string() + ": empty file");
    const size_t ncol = csv::split_line(line).size();
    require(ncol >= 2, ErrorKind::schema, path.string() + ": no task columns");
    std::vector<double> values;
    int line_no = 1, rows = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto cells = csv::split_line(line);
        require(cells.size() == ncol, ErrorKind::schema,
                path.string() + ":" + std::to_string(line_no) + ": ragged row");
        for (size_t j = 1; j < ncol; ++j)
            values.push_back(csv::parse_number(cells[j], path.string(), line_no));
        ++rows;
    }
    MatrixXd M(rows, Eigen::Index(ncol - 1));
    for (int i = 0; i < rows; ++i)
        for (size_t j = 0; j + 1 < ncol; ++j)
            M(i, Eigen::Index(j)) = values[size_t(i) * (ncol - 1) + j];
    return M;
}

/// Train/test task files plus the ground-truth sidecar tables.
inline void write_study(const std::filesystem::path& dir,
                        const SimulatedStudy& study) {
    namespace fs = std::filesystem;
    fs::create_directories(dir / "train");
    fs::create_directories(dir / "test");
    const auto features = default_feature_names(study.train.p());
    std::vector<std::string> ids;
    for (Eigen::Index k = 0; k < study.train.K(); ++k) {
        const auto& t = study.train.tasks[k];
        ids.push_back(t.id);
        write_task_csv(dir / "train" / (t.id + ".csv"), t, features);
        write_task_csv(dir / "test" / (t.id + ".csv"), study.test.tasks[k], features);
    }
    write_coef_csv(dir / "truth_B.csv", study.truth.B_star, features, ids);
    write_coef_csv(dir / "truth_Z.csv", study.truth.Z_star.cast<double>(), features, ids);
    std::ofstream os(dir / "truth_meta.csv");
    os << "task,intercept,sigma2\n";
    for (Eigen::Index k = 0; k < study.train.K(); ++k)
        os << ids[size_t(k)] << "," << csv::num(study.truth.intercepts[k]) << ","
           << csv::num(study.truth.sigma2[k]) << "\n";
}

}  // namespace smtl
