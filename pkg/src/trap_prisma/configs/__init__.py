from trap_prisma.configs.ExperimentConfig import SCHEMA_VERSION, ExperimentConfig
from trap_prisma.configs.LossConfig import LossConfig, LossParams
