#include "slt/dataset_io.hpp"

#include <fstream>
#include <sstream>

#include "slt/errors.hpp"

namespace slt {

using nlohmann::json;

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

std::string task_kind_name(TaskKind k) {
    return k == TaskKind::RealGaussian ? "real" : "categorical";
}

std::string concept_kind_name(ConceptKind k) {
    return k == ConceptKind::RealGaussian ? "real" : "binary";
}

TaskKind task_kind_from(const std::string& s) {
    if (s == "real") return TaskKind::RealGaussian;
    if (s == "categorical") return TaskKind::Categorical;
    throw std::invalid_argument("unknown task kind '" + s + "' (real|categorical)");
}

ConceptKind concept_kind_from(const std::string& s) {
    if (s == "real") return ConceptKind::RealGaussian;
    if (s == "binary") return ConceptKind::BernoulliMulti;
    throw std::invalid_argument("unknown concept kind '" + s + "' (real|binary)");
}

Eigen::VectorXd vector_from_json(const json& j) {
    require(j.is_array(), "expected a JSON array of numbers");
    Eigen::VectorXd v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) {
        require(j[i].is_number(), "expected numeric array entries");
        v[static_cast<long>(i)] = j[i].get<double>();
    }
    return v;
}

json vector_to_json(const Eigen::VectorXd& v) {
    json arr = json::array();
    for (long i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

}  // namespace

json dims_to_json(const ModelDims& d) {
    return json{{"n_in", d.n_in},
                {"n_concepts", d.n_concepts},
                {"n_out", d.n_out},
                {"hidden", d.hidden},
                {"true_rank", d.true_rank}};
}

ModelDims dims_from_json(const json& j) {
    require(j.is_object(), "dims must be a JSON object");
    ModelDims d;
    d.n_in = j.value("n_in", 1);
    d.n_concepts = j.value("n_concepts", 0);
    d.n_out = j.value("n_out", 1);
    d.hidden = j.value("hidden", 1);
    d.true_rank = j.value("true_rank", 0);
    d.gamma = j.value("gamma", 1.0);
    return d;
}

json kinds_to_json(const ResponseKinds& k) {
    return json{{"task", task_kind_name(k.task)}, {"concept", concept_kind_name(k.concepts)}};
}

ResponseKinds kinds_from_json(const json& j) {
    require(j.is_object(), "kinds must be a JSON object");
    ResponseKinds k;
    k.task = task_kind_from(j.value("task", "real"));
    k.concepts = concept_kind_from(j.value("concept", "real"));
    return k;
}

json spec_to_json(const ModelSpec& s) {
    return json{{"family", family_name(s.family)},
                {"dims", dims_to_json(s.dims)},
                {"kinds", kinds_to_json(s.kinds)},
                {"gamma", s.dims.gamma}};
}

ModelSpec spec_from_json(const json& j) {
    require(j.is_object(), "model spec must be a JSON object");
    require(j.contains("family"), "model spec needs a 'family' field");
    auto fam = family_from_name(j.at("family").get<std::string>());
    require(fam.has_value(), "unknown family (cbm|multitask|standard)");
    ModelSpec s;
    s.family = *fam;
    s.dims = dims_from_json(j.value("dims", json::object()));
    if (j.contains("gamma")) s.dims.gamma = j.at("gamma").get<double>();
    if (j.contains("kinds")) s.kinds = kinds_from_json(j.at("kinds"));
    validate_spec(s);
    return s;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (long r = 0; r < m.rows(); ++r) rows.push_back(vector_to_json(m.row(r).transpose()));
    return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
    require(j.is_array(), "matrix must be an array of rows");
    long n_rows = static_cast<long>(j.size());
    if (n_rows == 0) return Eigen::MatrixXd(0, 0);
    Eigen::VectorXd first = vector_from_json(j[0]);
    Eigen::MatrixXd m(n_rows, first.size());
    m.row(0) = first.transpose();
    for (long r = 1; r < n_rows; ++r) {
        Eigen::VectorXd row = vector_from_json(j[static_cast<std::size_t>(r)]);
        require(row.size() == m.cols(), "matrix rows must have equal length");
        m.row(r) = row.transpose();
    }
    return m;
}

json params_to_json(const ParamPoint& p) {
    return json{{"wout", matrix_to_json(p.wout)}, {"win", matrix_to_json(p.win)}};
}

ParamPoint params_from_json(const json& j) {
    require(j.is_object() && j.contains("wout") && j.contains("win"),
            "parameters need 'wout' and 'win' matrices");
    ParamPoint p;
    p.wout = matrix_from_json(j.at("wout"));
    p.win = matrix_from_json(j.at("win"));
    return p;
}

void write_jsonl(const Dataset& d, const std::string& path) {
    validate_dataset(d);
    std::ofstream out(path);
    if (!out) throw io_error("cannot open '" + path + "' for writing");

    json header = spec_to_json(d.spec);
    header["seed"] = d.seed;
    header["n"] = d.n();
    out << header.dump() << "\n";
    for (long l = 0; l < d.n(); ++l) {
        json rec{{"x", vector_to_json(d.X.row(l).transpose())},
                 {"c", vector_to_json(d.C.row(l).transpose())},
                 {"y", vector_to_json(d.Y.row(l).transpose())}};
        out << rec.dump() << "\n";
    }
    if (!out) throw io_error("failed while writing '" + path + "'");
}

Dataset read_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open '" + path + "' for reading");

    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("dataset file is empty: " + path);
    json header;
    try {
        header = json::parse(line);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument("malformed dataset header: " + std::string(e.what()));
    }

    Dataset d;
    d.spec = spec_from_json(header);
    d.seed = header.value("seed", 0ULL);

    std::vector<json> records;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            records.push_back(json::parse(line));
        } catch (const json::parse_error& e) {
            throw std::invalid_argument("malformed dataset record: " + std::string(e.what()));
        }
    }

    long n = static_cast<long>(records.size());
    d.X.resize(n, d.spec.dims.n_in);
    d.C.resize(n, d.spec.dims.n_concepts);
    d.Y.resize(n, d.spec.dims.n_out);
    for (long l = 0; l < n; ++l) {
        const json& rec = records[static_cast<std::size_t>(l)];
        require(rec.contains("x") && rec.contains("c") && rec.contains("y"),
                "dataset records need x, c, y fields");
        Eigen::VectorXd x = vector_from_json(rec.at("x"));
        Eigen::VectorXd c = vector_from_json(rec.at("c"));
        Eigen::VectorXd y = vector_from_json(rec.at("y"));
        require(x.size() == d.spec.dims.n_in, "record x length must equal n_in");
        require(c.size() == d.spec.dims.n_concepts, "record c length must equal n_concepts");
        require(y.size() == d.spec.dims.n_out, "record y length must equal n_out");
        d.X.row(l) = x.transpose();
        d.C.row(l) = c.transpose();
        d.Y.row(l) = y.transpose();
    }
    validate_dataset(d);
    return d;
}

}  // namespace slt
