#include "supergeo/model.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "supergeo/sampling.hpp"

namespace supergeo {

const SuperMetric& Model::metric() const {
    if (!metric_)
        throw DomainError("model has no [metric] section");
    return *metric_;
}

const OneForm& Model::oneform() const {
    if (!oneform_)
        throw DomainError("model has no [oneform] section");
    return *oneform_;
}

namespace {

std::string trim(std::string_view s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string_view::npos)
        return {};
    std::size_t b = s.find_last_not_of(" \t\r");
    return std::string(s.substr(a, b - a + 1));
}

// strips an unquoted trailing comment
std::string strip_comment(std::string_view line) {
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"')
            quoted = !quoted;
        else if (line[i] == '#' && !quoted)
            return std::string(line.substr(0, i));
    }
    return std::string(line);
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(trim(s.substr(start)));
            break;
        }
        out.push_back(trim(s.substr(start, pos - start)));
        start = pos + 1;
    }
    return out;
}

struct Entry {
    std::string key;
    std::string value;
    int line;
};

struct RawSections {
    std::vector<Entry> model, christoffel, metric, oneform, settings;
    bool saw_christoffel = false;
    bool saw_metric = false;
};

[[noreturn]] void fail(const std::string& source, int line, const std::string& message) {
    throw ParseError(message, source + ":" + std::to_string(line));
}

std::string unquote(const std::string& source, int line, const std::string& value) {
    if (value.size() < 2 || value.front() != '"' || value.back() != '"')
        fail(source, line, "expression values must be quoted");
    return value.substr(1, value.size() - 2);
}

// parses key heads like g(1,2) or Gamma(1,2,3); returns 0-based indices
std::vector<int> parse_indices(const std::string& source, int line, const std::string& key,
                               const std::string& head, std::size_t count, int dim) {
    if (key.rfind(head + "(", 0) != 0 || key.back() != ')')
        fail(source, line, "expected " + head + "(...) entry");
    std::string inner = key.substr(head.size() + 1, key.size() - head.size() - 2);
    auto parts = split(inner, ',');
    if (parts.size() != count)
        fail(source, line, head + " needs " + std::to_string(count) + " indices");
    std::vector<int> idx;
    for (const auto& p : parts) {
        int v = 0;
        auto [ptr, ec] = std::from_chars(p.data(), p.data() + p.size(), v);
        if (ec != std::errc{} || ptr != p.data() + p.size() || v < 1 || v > dim)
            fail(source, line, "index '" + p + "' outside 1.." + std::to_string(dim));
        idx.push_back(v - 1);
    }
    return idx;
}

double parse_double(const std::string& source, int line, const std::string& value) {
    char* end = nullptr;
    double v = std::strtod(value.c_str(), &end);
    if (end != value.c_str() + value.size() || value.empty())
        fail(source, line, "expected a number, got '" + value + "'");
    return v;
}

} // namespace

Model parse_model_text(std::string_view text, const std::string& source_name) {
    RawSections raw;
    std::vector<Entry>* current = nullptr;
    int line_no = 0;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        std::string cleaned = trim(strip_comment(line));
        if (cleaned.empty())
            continue;
        if (cleaned.front() == '[') {
            if (cleaned.back() != ']')
                fail(source_name, line_no, "malformed section header");
            std::string name = cleaned.substr(1, cleaned.size() - 2);
            if (name == "model")
                current = &raw.model;
            else if (name == "christoffel") {
                current = &raw.christoffel;
                raw.saw_christoffel = true;
            } else if (name == "metric") {
                current = &raw.metric;
                raw.saw_metric = true;
            } else if (name == "oneform")
                current = &raw.oneform;
            else if (name == "settings")
                current = &raw.settings;
            else
                fail(source_name, line_no, "unknown section [" + name + "]");
            continue;
        }
        std::size_t eq = cleaned.find('=');
        if (eq == std::string::npos)
            fail(source_name, line_no, "expected key = value");
        if (!current)
            fail(source_name, line_no, "entry outside of any section");
        current->push_back(
            Entry{trim(cleaned.substr(0, eq)), trim(cleaned.substr(eq + 1)), line_no});
    }

    // [model]
    std::vector<std::string> evens, odds;
    for (const auto& e : raw.model) {
        std::vector<std::string> names;
        for (auto& n : split(e.value, ','))
            if (!n.empty())
                names.push_back(n);
        if (e.key == "even")
            evens = names;
        else if (e.key == "odd")
            odds = names;
        else
            fail(source_name, e.line, "unknown [model] key '" + e.key + "'");
    }
    if (evens.empty() && odds.empty())
        fail(source_name, 1, "[model] must declare coordinates");

    Model model;
    try {
        model.coords_ = std::make_shared<CoordinateSystem>(evens, odds);
    } catch (const DomainError& err) {
        fail(source_name, 1, err.what());
    }
    const CoordinateSystem& cs = *model.coords_;
    const int n = cs.size();

    if (raw.saw_christoffel == raw.saw_metric)
        fail(source_name, 1, "exactly one of [christoffel] or [metric] is required");

    if (raw.saw_christoffel) {
        ChristoffelField gamma(model.coords_);
        for (const auto& e : raw.christoffel) {
            auto idx = parse_indices(source_name, e.line, e.key, "Gamma", 3, n);
            try {
                gamma.set_entry(idx[0], idx[1], idx[2],
                                parse_expr(unquote(source_name, e.line, e.value), cs));
            } catch (const ParseError& err) {
                fail(source_name, e.line, err.what());
            }
        }
        try {
            gamma.validate_parities();
        } catch (const DomainError& err) {
            fail(source_name, 1, err.what());
        }
        model.connection_ = std::move(gamma);
    } else {
        SuperMetric::Builder builder(model.coords_);
        for (const auto& e : raw.metric) {
            auto idx = parse_indices(source_name, e.line, e.key, "g", 2, n);
            try {
                builder.set_entry(idx[0], idx[1],
                                  parse_expr(unquote(source_name, e.line, e.value), cs));
            } catch (const ParseError& err) {
                fail(source_name, e.line, err.what());
            } catch (const DomainError& err) {
                fail(source_name, e.line, err.what());
            }
        }
        try {
            model.metric_ = builder.build();
            model.connection_ = levi_civita(*model.metric_);
        } catch (const DomainError& err) {
            fail(source_name, 1, err.what());
        }
    }

    if (!raw.oneform.empty()) {
        std::vector<SuperExpr> comps(n, SuperExpr(0.0));
        for (const auto& e : raw.oneform) {
            auto idx = parse_indices(source_name, e.line, e.key, "alpha", 1, n);
            try {
                comps[idx[0]] = parse_expr(unquote(source_name, e.line, e.value), cs);
            } catch (const ParseError& err) {
                fail(source_name, e.line, err.what());
            }
        }
        OneForm alpha(model.coords_, std::move(comps));
        try {
            alpha.require_even();
        } catch (const DomainError& err) {
            fail(source_name, 1, err.what());
        }
        model.oneform_ = std::move(alpha);
    }

    ModelSettings s;
    s.generators = cs.odd_count() + 2;
    for (const auto& e : raw.settings) {
        if (e.key == "h")
            s.h = parse_double(source_name, e.line, e.value);
        else if (e.key == "t_end")
            s.t_end = parse_double(source_name, e.line, e.value);
        else if (e.key == "tolerance")
            s.tolerance = parse_double(source_name, e.line, e.value);
        else if (e.key == "generators")
            s.generators = static_cast<int>(parse_double(source_name, e.line, e.value));
        else if (e.key == "blowup")
            s.blowup = parse_double(source_name, e.line, e.value);
        else if (e.key == "samples")
            s.samples = static_cast<int>(parse_double(source_name, e.line, e.value));
        else if (e.key == "seed")
            s.seed = static_cast<std::uint64_t>(parse_double(source_name, e.line, e.value));
        else
            fail(source_name, e.line, "unknown [settings] key '" + e.key + "'");
    }
    if (s.h <= 0)
        fail(source_name, 1, "step h must be positive");
    if (s.generators < cs.odd_count())
        fail(source_name, 1, "generators must cover the odd coordinates");
    if (s.generators > 20)
        fail(source_name, 1, "generators limited to 20");
    model.settings_ = s;
    return model;
}

Model load_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ParseError("cannot open model file", path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_model_text(buf.str(), path);
}

GrassmannNumber parse_grassmann_literal(std::string_view text, int generators) {
    std::vector<GrassmannNumber::Term> terms;
    for (const auto& piece : split(text, ',')) {
        if (piece.empty())
            throw ParseError("empty coefficient literal", std::string(text));
        std::size_t at = piece.find('@');
        std::string coeff = (at == std::string::npos) ? piece : piece.substr(0, at);
        char* end = nullptr;
        double c = std::strtod(coeff.c_str(), &end);
        if (end != coeff.c_str() + coeff.size() || coeff.empty())
            throw ParseError("bad coefficient '" + coeff + "'", std::string(text));
        std::uint32_t mask = 0;
        if (at != std::string::npos) {
            std::string subset = piece.substr(at + 1);
            if (subset != "body") {
                auto add_index = [&](int k) {
                    if (k < 1 || k > generators)
                        throw ParseError("generator index outside 1.." +
                                             std::to_string(generators),
                                         std::string(text));
                    std::uint32_t bit = std::uint32_t{1} << (k - 1);
                    if (mask & bit)
                        throw ParseError("repeated generator in subset", std::string(text));
                    mask |= bit;
                };
                if (subset.find('_') != std::string::npos) {
                    for (const auto& part : split(subset, '_'))
                        add_index(std::atoi(part.c_str()));
                } else {
                    for (char ch : subset) {
                        if (ch < '1' || ch > '9')
                            throw ParseError("bad subset '" + subset + "'", std::string(text));
                        add_index(ch - '0');
                    }
                }
            }
        }
        terms.emplace_back(mask, c);
    }
    return GrassmannNumber::from_terms(generators, std::move(terms));
}

std::vector<GrassmannNumber> parse_value_list(std::string_view text, int generators, int count) {
    // coordinate groups separated by ';' or whitespace
    std::string normalized(text);
    for (char& c : normalized)
        if (c == ';' || c == '\t')
            c = ' ';
    std::vector<GrassmannNumber> out;
    for (const auto& group : split(normalized, ' '))
        if (!group.empty())
            out.push_back(parse_grassmann_literal(group, generators));
    if (static_cast<int>(out.size()) != count)
        throw ParseError("expected " + std::to_string(count) + " coordinate groups, got " +
                             std::to_string(out.size()),
                         std::string(text));
    return out;
}

std::vector<SuperPoint> model_sample_points(const Model& model, int count, std::uint64_t seed) {
    Sampler sampler(seed, model.settings().generators);
    const CoordinateSystemPtr& cs = model.coords_ptr();
    std::vector<SuperPoint> out;
    out.reserve(count);
    for (int k = 0; k < count; ++k) {
        std::vector<GrassmannNumber> vals;
        for (int i = 0; i < cs->size(); ++i) {
            if (cs->parity(i) == Parity::Even)
                vals.push_back(sampler.even_value(0.5, 1.5, 2, 0.4));
            else
                vals.push_back(sampler.odd_value(
                    1 + (i - cs->even_count()) % sampler.generators(), 0.6));
        }
        out.emplace_back(cs, std::move(vals));
    }
    return out;
}

std::vector<CotangentPoint> model_sample_cotangent(const Model& model, int count,
                                                   std::uint64_t seed) {
    Sampler sampler(seed ^ 0x9e3779b97f4a7c15ULL, model.settings().generators);
    const CoordinateSystemPtr& cs = model.coords_ptr();
    std::vector<CotangentPoint> out;
    out.reserve(count);
    for (int k = 0; k < count; ++k) {
        std::vector<GrassmannNumber> vals, momenta;
        for (int i = 0; i < cs->size(); ++i) {
            if (cs->parity(i) == Parity::Even) {
                vals.push_back(sampler.even_value(0.5, 1.5, 2, 0.4));
                momenta.push_back(sampler.even_value(-1.0, 1.0, 2, 0.4));
            } else {
                vals.push_back(sampler.odd_value(
                    1 + (i - cs->even_count()) % sampler.generators(), 0.6));
                momenta.push_back(sampler.odd_value(
                    1 + (i + 1 - cs->even_count()) % sampler.generators(), 0.6));
            }
        }
        out.push_back(CotangentPoint{SuperPoint(cs, std::move(vals)), std::move(momenta)});
    }
    return out;
}

} // namespace supergeo
