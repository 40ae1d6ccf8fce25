import sys

from MelGAN.CustomApp.App import main

sys.exit(main())
