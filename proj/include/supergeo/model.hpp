#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "supergeo/metric.hpp"
#include "supergeo/projective.hpp"

namespace supergeo {

struct ModelSettings {
    double h = 1e-3;
    double t_end = 1.0;
    double tolerance = 1e-10;
    int generators = 0; // resolved: odd count + 2 unless set explicitly
    double blowup = 1e12;
    int samples = 100;
    std::uint64_t seed = 1;
};

// Parsed model file: coordinates, exactly one connection source
// ([christoffel] or [metric]), an optional [oneform], and settings.
class Model {
public:
    const CoordinateSystem& coords() const { return *coords_; }
    const CoordinateSystemPtr& coords_ptr() const { return coords_; }

    bool has_metric() const { return metric_.has_value(); }
    const SuperMetric& metric() const;
    // the declared symbols, or the Levi-Civita connection of the metric
    const ChristoffelField& connection() const { return *connection_; }
    bool has_oneform() const { return oneform_.has_value(); }
    const OneForm& oneform() const;

    const ModelSettings& settings() const { return settings_; }

    friend Model parse_model_text(std::string_view text, const std::string& source_name);

private:
    CoordinateSystemPtr coords_;
    std::optional<SuperMetric> metric_;
    std::optional<ChristoffelField> connection_;
    std::optional<OneForm> oneform_;
    ModelSettings settings_;
};

Model parse_model_text(std::string_view text, const std::string& source_name);
Model load_model_file(const std::string& path);

// "c@subset" literals, comma-separated per coordinate, coordinates separated
// by ';'. subset is "body" or generator indices as digits ("12") or joined
// by '_' ("1_12"); a bare real means the body coefficient.
GrassmannNumber parse_grassmann_literal(std::string_view text, int generators);
std::vector<GrassmannNumber> parse_value_list(std::string_view text, int generators, int count);

// Deterministic sample points for residual checks: bodies uniform in
// [0.5, 1.5] plus nilpotent perturbations, odd slots spread across
// generators (see Sampler).
std::vector<SuperPoint> model_sample_points(const Model& model, int count, std::uint64_t seed);
std::vector<CotangentPoint> model_sample_cotangent(const Model& model, int count,
                                                   std::uint64_t seed);

} // namespace supergeo
