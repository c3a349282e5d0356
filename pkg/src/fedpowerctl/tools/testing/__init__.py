from .mock_channels import ConstantStateBandit, make_interference_gains, make_random_gains, naive_sinr
