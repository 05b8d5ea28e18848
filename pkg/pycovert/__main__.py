import pycovert

if __name__ == "__main__":
    pycovert.main()
