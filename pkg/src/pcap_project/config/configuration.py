from pathlib import Path

from box import ConfigBox

from pcap_project.constants import (
    CONFIG_FILE_PATH,
    DEFAULT_INDEX_NAMES,
    DEFAULT_REPORT_COLUMNS,
    PARAMS_FILE_PATH,
    SCHEMA_FILE_PATH,
)
from pcap_project.entity.artifact_entity import Criterion, OutlierMethod
from pcap_project.entity.config_entity import (
    AnalysisMode,
    ArtifactConfig,
    DistributionFitConfig,
    OutlierAction,
    OutlierConfig,
    ReportSchemaConfig,
    SigmaConfig,
    SummaryConfig,
    WorkflowConfig,
)
from pcap_project.entity.domain_entity import Family, SigmaMethod
from pcap_project.exception import InvalidConfiguration
from pcap_project.logger import logger
from pcap_project.utils import read_yaml


def _read_optional_yaml(path: Path) -> ConfigBox:
    if Path(path).is_file():
        content = read_yaml(Path(path))
        return content if content is not None else ConfigBox({})
    logger.warning(f"config file not found: {path}, using built-in defaults")
    return ConfigBox({})


class ConfigurationManager:
    def __init__(
        self,
        config_filepath=CONFIG_FILE_PATH,
        params_filepath=PARAMS_FILE_PATH,
        schema_filepath=SCHEMA_FILE_PATH,
    ):

        self.config = _read_optional_yaml(config_filepath)
        self.params = _read_optional_yaml(params_filepath)
        self.schema = _read_optional_yaml(schema_filepath)

    @classmethod
    def from_directory(cls, config_dir: Path) -> "ConfigurationManager":
        config_dir = Path(config_dir)
        if not config_dir.is_dir():
            raise InvalidConfiguration(f"config directory not found: {config_dir}")
        return cls(
            config_filepath=config_dir / "config.yaml",
            params_filepath=config_dir / "params.yaml",
            schema_filepath=config_dir / "schema.yaml",
        )

    def get_outlier_config(self) -> OutlierConfig:
        params = self.params.get("outliers", ConfigBox({}))
        defaults = OutlierConfig()

        method_text = params.get("method", defaults.method.value)  # type: ignore[union-attr]
        try:
            method = (
                None
                # YAML reads a bare off as False
                if method_text in (None, False) or str(method_text).lower() == "off"
                else OutlierMethod.parse(method_text)
            )
            action = OutlierAction.parse(params.get("action", defaults.action.value))
        except ValueError as e:
            raise InvalidConfiguration(str(e)) from e

        outlier_config = OutlierConfig(
            method=method,
            action=action,
            tukey_k=float(params.get("tukey_k", defaults.tukey_k)),
            grubbs_alpha=float(params.get("grubbs_alpha", defaults.grubbs_alpha)),
            grubbs_iterate=bool(params.get("grubbs_iterate", defaults.grubbs_iterate)),
        )
        return outlier_config

    def get_sigma_config(self) -> SigmaConfig:
        params = self.params.get("sigma", ConfigBox({}))
        defaults = SigmaConfig()

        method_text = params.get("method")
        try:
            method = None if method_text is None else SigmaMethod.parse(method_text)
        except ValueError as e:
            raise InvalidConfiguration(str(e)) from e

        sigma_config = SigmaConfig(
            method=method,
            window=int(params.get("window", defaults.window)),
            srmssd_unbias=str(params.get("srmssd_unbias", defaults.srmssd_unbias)),
        )
        return sigma_config

    def get_distribution_fit_config(self) -> DistributionFitConfig:
        params = self.params.get("distfit", ConfigBox({}))
        defaults = DistributionFitConfig()

        try:
            criterion = Criterion.parse(
                params.get("criterion", defaults.criterion.value)
            )
            candidates = tuple(
                Family.parse(name)
                for name in params.get(
                    "candidates", [f.value for f in defaults.candidates]
                )
            )
        except ValueError as e:
            raise InvalidConfiguration(str(e)) from e

        distribution_fit_config = DistributionFitConfig(
            criterion=criterion,
            candidates=candidates,
            weibull3p_min_n=int(params.get("weibull3p_min_n", defaults.weibull3p_min_n)),
        )
        return distribution_fit_config

    def get_workflow_config(self) -> WorkflowConfig:
        params = self.params.get("workflow", ConfigBox({}))
        defaults = WorkflowConfig()

        workflow_config = WorkflowConfig(
            mode=AnalysisMode.parse(params.get("mode", defaults.mode.value)),
            alpha=float(params.get("alpha", defaults.alpha)),
            outliers=self.get_outlier_config(),
            sigma=self.get_sigma_config(),
            distfit=self.get_distribution_fit_config(),
            symmetry_tol=float(params.get("symmetry_tol", defaults.symmetry_tol)),
            max_workers=int(params.get("max_workers", defaults.max_workers)),
        )
        logger.info(f"workflow config loaded: {workflow_config}")
        return workflow_config

    def get_summary_config(self) -> SummaryConfig:
        params = self.params.get("summary", ConfigBox({}))
        defaults = SummaryConfig()

        summary_config = SummaryConfig(
            bin_edges=tuple(params.get("bin_edges", defaults.bin_edges)),
            ratio_limits=tuple(params.get("ratio_limits", defaults.ratio_limits)),  # type: ignore[arg-type]
        )
        return summary_config

    def get_artifact_config(self) -> ArtifactConfig:
        config = self.config.get("report", ConfigBox({}))
        defaults = ArtifactConfig()

        artifact_config = ArtifactConfig(
            root_dir=Path(config.get("root_dir", defaults.root_dir)),
            report_file=config.get("report_file", defaults.report_file),
            table_file=config.get("table_file", defaults.table_file),
            plots_dir=config.get("plots_dir", defaults.plots_dir),
        )
        return artifact_config

    def get_report_schema_config(self) -> ReportSchemaConfig:
        report_schema_config = ReportSchemaConfig(
            report_columns=tuple(
                self.schema.get("report_columns", DEFAULT_REPORT_COLUMNS)
            ),
            index_names=tuple(self.schema.get("index_names", DEFAULT_INDEX_NAMES)),
        )
        return report_schema_config
