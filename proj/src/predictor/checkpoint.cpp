#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "carpal/predictor.hpp"

namespace carpal {

namespace {

using nlohmann::json;

constexpr const char* kFormat = "carpal-model";
constexpr int kVersion = 1;

json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vec_from(const json& j) {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json mlp_json(const Mlp& net) {
    json layers = json::array();
    for (const auto& l : net.layers()) {
        std::vector<double> w;
        for (int r = 0; r < l.weight.rows(); ++r)
            for (int c = 0; c < l.weight.cols(); ++c) w.push_back(l.weight(r, c));
        layers.push_back({{"rows", l.weight.rows()},
                          {"cols", l.weight.cols()},
                          {"activation", to_string(l.activation)},
                          {"weight", w},
                          {"bias", vec_json(l.bias)}});
    }
    return layers;
}

Mlp mlp_from(const json& j) {
    std::vector<DenseLayer> layers;
    for (const auto& lj : j) {
        DenseLayer l;
        const int rows = lj.at("rows").get<int>(), cols = lj.at("cols").get<int>();
        const auto w = lj.at("weight").get<std::vector<double>>();
        require(rows > 0 && cols > 0 && w.size() == static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols),
                "checkpoint layer has inconsistent shape");
        l.weight.resize(rows, cols);
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c) l.weight(r, c) = w[static_cast<std::size_t>(r * cols + c)];
        l.bias = vec_from(lj.at("bias"));
        l.activation = activation_from_string(lj.at("activation").get<std::string>());
        layers.push_back(std::move(l));
    }
    return Mlp(std::move(layers));
}

}  // namespace

std::string model_to_json(const PredictorModel& m) {
    const auto& c = m.config;
    json j;
    j["format"] = kFormat;
    j["version"] = kVersion;
    j["architecture"] = {
        {"input_dim", m.input_dim()},
        {"trunk", c.trunk},
        {"utility_hidden", c.utility_hidden},
        {"horizon", c.horizon},
        {"features", {{"past_steps", c.features.past_steps},
                      {"map_cells", c.features.map_cells},
                      {"map_resolution", c.features.map_resolution}}},
        {"heads", {{"traj_mean", {head::traj_mean, 6}},
                   {"traj_logvar", {head::traj_var, 6}},
                   {"utility_stats", {head::utility, 4}},
                   {"pred_error", {head::pred_error, 1}}}},
    };
    j["input"] = {{"mean", vec_json(m.input_mean)}, {"scale", vec_json(m.input_scale)}};
    j["output"] = {{"offset", vec_json(m.output_offset)}, {"scale", vec_json(m.output_scale)}};
    j["trunk"] = mlp_json(m.trunk);
    j["traj_head"] = mlp_json(m.traj_head);
    j["utility_head"] = mlp_json(m.utility_head);
    j["error_head"] = mlp_json(m.error_head);
    return j.dump();
}

PredictorModel model_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("model checkpoint is not valid JSON: ") + e.what());
    }
    try {
        require(j.at("format") == kFormat, "not a carpal model checkpoint");
        require(j.at("version") == kVersion, "unsupported checkpoint version");
        const auto& a = j.at("architecture");
        PredictorModel m;
        m.config.trunk = a.at("trunk").get<std::vector<int>>();
        m.config.utility_hidden = a.at("utility_hidden").get<int>();
        m.config.horizon = a.at("horizon").get<double>();
        m.config.features.past_steps = a.at("features").at("past_steps").get<int>();
        m.config.features.map_cells = a.at("features").at("map_cells").get<int>();
        m.config.features.map_resolution = a.at("features").at("map_resolution").get<double>();
        m.config.validate();
        m.input_mean = vec_from(j.at("input").at("mean"));
        m.input_scale = vec_from(j.at("input").at("scale"));
        m.output_offset = vec_from(j.at("output").at("offset"));
        m.output_scale = vec_from(j.at("output").at("scale"));
        m.trunk = mlp_from(j.at("trunk"));
        m.traj_head = mlp_from(j.at("traj_head"));
        m.utility_head = mlp_from(j.at("utility_head"));
        m.error_head = mlp_from(j.at("error_head"));
        const int in = m.config.features.length();
        require(a.at("input_dim").get<int>() == in && m.input_mean.size() == in && m.input_scale.size() == in,
                "checkpoint input width does not match its feature layout");
        require(m.trunk.in_dim() == in, "checkpoint trunk does not match the input width");
        require(m.output_offset.size() == head::outputs && m.output_scale.size() == head::outputs,
                "checkpoint output transform has the wrong size");
        require(m.traj_head.out_dim() == 12 && m.utility_head.out_dim() == 4 && m.error_head.out_dim() == 1,
                "checkpoint heads have the wrong widths");
        for (const Mlp* h : {&m.traj_head, &m.utility_head, &m.error_head})
            require(h->in_dim() == m.trunk.out_dim(), "checkpoint head does not match the trunk width");
        return m;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed model checkpoint: ") + e.what());
    }
}

void save_model(const PredictorModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write model checkpoint '" + path + "'");
    out << model_to_json(model) << '\n';
}

PredictorModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open model checkpoint '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return model_from_json(ss.str());
}

}  // namespace carpal
